#pragma once

#include "camgen/backbone.hpp"
#include "camgen/config.hpp"
#include "camgen/example.hpp"
#include "camgen/guidance.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace camgen {

enum class Split { extensive, limited, all };

Split parse_split(std::string_view name);
std::string_view to_string(Split s);
bool in_split(MotionClass c, Split s);

struct ClipScore {
    std::string clip_id;
    MotionClass motion = MotionClass::limited;
    double mask_ratio = 0.0;
    double psnr_endpoint = 0.0;
    double ssim_endpoint = 0.0;
    double psnr_mean = 0.0;  // over supervised frames 1..N-1
    double ssim_mean = 0.0;
};

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

MeanStd mean_std(const std::vector<double>& values);

struct SplitSummary {
    Split split = Split::all;
    int count = 0;
    MeanStd psnr_endpoint, ssim_endpoint, psnr_mean, ssim_mean;
};

struct EvalReport {
    Split split = Split::all;
    std::vector<ClipScore> clips;  // clips of the requested split, dataset order
    std::vector<SplitSummary> summaries;  // extensive, limited, all (restricted to clips above)
    std::string config;                   // effective configuration snapshot

    const SplitSummary& summary(Split s) const;
};

struct EvalOptions {
    Split split = Split::all;
    /// Score the guidance renders themselves (model-free baseline).
    bool copy_guidance = false;
    int steps = 20;
    std::uint64_t seed = 0;
    /// When set, writes input | guidance endpoint | generated endpoint | ground truth strips here.
    std::optional<std::filesystem::path> strips_dir;
};

/// Per-clip sampling seed.
std::uint64_t clip_sample_seed(std::uint64_t eval_seed, std::uint64_t clip_seed);

/// Generated frames (N of them, values clamped to [0,1]) for one example.
std::vector<Image> generate_frames(const ModelParams<float>& params, const RunConfig& cfg, const Example& ex, int steps,
                                   std::uint64_t seed);

/// `params` may be null only with copy_guidance. Throws EmptySplitError when
/// no clip falls in the requested split.
EvalReport evaluate(const ModelParams<float>* params, const RunConfig& cfg, const std::vector<Example>& examples,
                    const EvalOptions& options);

/// One line per clip: clip_id class psnr_endpoint ssim_endpoint psnr_mean ssim_mean.
std::string format_report_lines(const EvalReport& report);
/// Human-readable table of the split summaries.
std::string format_report_summary(const EvalReport& report);
/// Config snapshot, per-clip lines and summary in one text file.
void write_report(const std::filesystem::path& path, const EvalReport& report);

} // namespace camgen
