#pragma once

#include "camgen/backbone.hpp"
#include "camgen/config.hpp"
#include "camgen/guidance.hpp"
#include "camgen/scenes.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace camgen {

/// One clip prepared for the model: sparse frames, temporal extension and
/// guidance renders, all with N = n_frames rows.
struct Example {
    std::string clip_id;
    std::uint64_t clip_seed = 0;
    int trajectory_frames = 0;        // unique poses; frames past this are endpoint copies
    std::vector<int> source_indices;  // raw clip frame per row
    Trajectory trajectory;            // extended, N poses
    std::vector<Image> frames;        // ground truth, N frames
    GuidanceSequence guidance;        // N renders, frame 0 is the input image
    Mat<float> frame_latents;         // N x frame_values
    Mat<float> guidance_latents;      // N x frame_values
    MotionClass motion = MotionClass::limited;

    int endpoint_index() const { return trajectory_frames - 1; }
};

Example make_example(const Clip& clip, const RunConfig& cfg, std::string clip_id = {});

/// Motion profile of clip `seed` under a config profile name; "cycle" walks
/// dolly, orbit, truck, mixed by seed.
MotionProfile clip_profile(const std::string& profile, std::uint64_t seed);

/// Clip `seed` at the configured resolution and raw length.
Clip generate_dataset_clip(const RunConfig& cfg, std::uint64_t seed);

/// Writes clips cfg.seed .. cfg.seed + n_clips - 1 plus config.txt into `dir`.
void generate_dataset(const std::filesystem::path& dir, const RunConfig& cfg, int n_clips);

/// The same clips as generate_dataset, prepared in memory.
std::vector<Example> generate_examples(const RunConfig& cfg, int n_clips);

/// Reads every clip of a dataset directory in name order.
std::vector<Example> load_examples(const std::filesystem::path& dataset_dir, const RunConfig& cfg);

} // namespace camgen
