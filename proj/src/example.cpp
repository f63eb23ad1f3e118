#include "camgen/example.hpp"
#include "camgen/errors.hpp"
#include "camgen/flow.hpp"
#include "camgen/supervision.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace camgen {

Example make_example(const Clip& clip, const RunConfig& cfg, std::string clip_id) {
    const SupervisionConfig sup = cfg.supervision();
    sup.validate();
    const int n_traj = sup.trajectory_frames();
    if (clip.length() < n_traj)
        throw DataError(fmt::format("clip {} has {} frames, need at least {}", clip.seed, clip.length(), n_traj));
    if (clip.intrinsics.width != cfg.resolution || clip.intrinsics.height != cfg.resolution)
        throw VersionError(fmt::format("clip {} is {}x{}, model expects {}x{}", clip.seed, clip.intrinsics.width,
                                       clip.intrinsics.height, cfg.resolution, cfg.resolution));

    Example ex;
    ex.clip_id = clip_id.empty() ? clip_dir_name(clip.seed) : std::move(clip_id);
    ex.clip_seed = clip.seed;
    ex.trajectory_frames = n_traj;
    ex.source_indices = apply_temporal_extension(sparse_sample_indices(clip.length(), n_traj), sup.n_extension);
    for (int idx : ex.source_indices) {
        ex.trajectory.poses.push_back(clip.trajectory[idx]);
        ex.frames.push_back(clip.frames[idx]);
    }
    ex.guidance = build_guidance(clip.frames.front(), clip.depths.front(), ex.trajectory, clip.intrinsics);
    ex.motion = classify_motion(ex.guidance.mask_ratio_final);
    ex.frame_latents = to_latents(ex.frames);
    ex.guidance_latents = to_latents(ex.guidance.frames);
    return ex;
}

MotionProfile clip_profile(const std::string& profile, std::uint64_t seed) {
    if (profile != "cycle") return parse_motion_profile(profile);
    static constexpr MotionProfile kCycle[] = {MotionProfile::dolly, MotionProfile::orbit, MotionProfile::truck,
                                               MotionProfile::mixed};
    return kCycle[seed % 4];
}

Clip generate_dataset_clip(const RunConfig& cfg, std::uint64_t seed) {
    return generate_clip(seed, cfg.sparse_source_len, clip_profile(cfg.profile, seed), cfg.resolution, cfg.resolution);
}

void generate_dataset(const std::filesystem::path& dir, const RunConfig& cfg, int n_clips) {
    if (n_clips < 1) throw std::invalid_argument("gen-data: n_clips must be >= 1");
    cfg.validate();
    std::filesystem::create_directories(dir);
    save_config(dir / "config.txt", cfg);
    for (int i = 0; i < n_clips; ++i) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(i);
        write_clip(generate_dataset_clip(cfg, seed), dir / clip_dir_name(seed));
    }
}

std::vector<Example> generate_examples(const RunConfig& cfg, int n_clips) {
    if (n_clips < 1) throw std::invalid_argument("generate_examples: n_clips must be >= 1");
    std::vector<Example> out;
    for (int i = 0; i < n_clips; ++i)
        out.push_back(make_example(generate_dataset_clip(cfg, cfg.seed + static_cast<std::uint64_t>(i)), cfg));
    return out;
}

std::vector<Example> load_examples(const std::filesystem::path& dataset_dir, const RunConfig& cfg) {
    std::vector<Example> out;
    for (const auto& dir : list_clips(dataset_dir)) out.push_back(make_example(read_clip(dir), cfg, dir.filename().string()));
    return out;
}

} // namespace camgen
