#include "camgen/evaluate.hpp"
#include "camgen/errors.hpp"
#include "camgen/flow.hpp"
#include "camgen/metrics.hpp"
#include "camgen/random.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace camgen {

Split parse_split(std::string_view name) {
    if (name == "extensive") return Split::extensive;
    if (name == "limited") return Split::limited;
    if (name == "all") return Split::all;
    throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

std::string_view to_string(Split s) {
    switch (s) {
    case Split::extensive: return "extensive";
    case Split::limited: return "limited";
    case Split::all: return "all";
    }
    return "all";
}

bool in_split(MotionClass c, Split s) {
    if (s == Split::all) return true;
    return (c == MotionClass::extensive) == (s == Split::extensive);
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(var / static_cast<double>(values.size()));
    return out;
}

const SplitSummary& EvalReport::summary(Split s) const {
    for (const auto& sm : summaries)
        if (sm.split == s) return sm;
    throw std::out_of_range("report has no summary for that split");
}

std::uint64_t clip_sample_seed(std::uint64_t eval_seed, std::uint64_t clip_seed) {
    return mix_seed(eval_seed, 0x6576616c00000000ull ^ clip_seed);
}

std::vector<Image> generate_frames(const ModelParams<float>& params, const RunConfig& cfg, const Example& ex, int steps,
                                   std::uint64_t seed) {
    const Mat<float> guidance = cfg.disable_guidance ? Mat<float>(0, ex.guidance_latents.cols()) : ex.guidance_latents;
    const Mat<float> z = sample<float>(params, guidance, ex.frame_latents.topRows(1), cfg.n_frames, steps, seed,
                                       cfg.forward_options());
    std::vector<Image> frames = from_latents(z, cfg.resolution, cfg.resolution);
    for (auto& f : frames) f = clamp_unit(std::move(f));
    return frames;
}

namespace {

SplitSummary summarize(const std::vector<ClipScore>& clips, Split split) {
    SplitSummary s;
    s.split = split;
    std::vector<double> pe, se, pm, sm;
    for (const auto& c : clips) {
        if (!in_split(c.motion, split)) continue;
        pe.push_back(c.psnr_endpoint);
        se.push_back(c.ssim_endpoint);
        pm.push_back(c.psnr_mean);
        sm.push_back(c.ssim_mean);
    }
    s.count = static_cast<int>(pe.size());
    s.psnr_endpoint = mean_std(pe);
    s.ssim_endpoint = mean_std(se);
    s.psnr_mean = mean_std(pm);
    s.ssim_mean = mean_std(sm);
    return s;
}

} // namespace

EvalReport evaluate(const ModelParams<float>* params, const RunConfig& cfg, const std::vector<Example>& examples,
                    const EvalOptions& options) {
    if (!params && !options.copy_guidance) throw std::invalid_argument("evaluate: no model given and copy_guidance off");
    if (options.steps < 1) throw std::invalid_argument("evaluate: steps must be >= 1");

    EvalReport report;
    report.split = options.split;
    report.config = format_config(cfg);
    if (options.strips_dir) std::filesystem::create_directories(*options.strips_dir);

    for (const Example& ex : examples) {
        if (!in_split(ex.motion, options.split)) continue;
        const std::vector<Image> generated =
            options.copy_guidance ? ex.guidance.frames
                                  : generate_frames(*params, cfg, ex, options.steps, clip_sample_seed(options.seed, ex.clip_seed));

        ClipScore score;
        score.clip_id = ex.clip_id;
        score.motion = ex.motion;
        score.mask_ratio = ex.guidance.mask_ratio_final;
        const int e = ex.endpoint_index();
        score.psnr_endpoint = psnr(generated[e], ex.frames[e]);
        score.ssim_endpoint = ssim(generated[e], ex.frames[e]);
        const int n = static_cast<int>(ex.frames.size());
        for (int f = 1; f < n; ++f) {
            score.psnr_mean += psnr(generated[f], ex.frames[f]);
            score.ssim_mean += ssim(generated[f], ex.frames[f]);
        }
        score.psnr_mean /= n - 1;
        score.ssim_mean /= n - 1;
        report.clips.push_back(score);

        if (options.strips_dir)
            write_png(*options.strips_dir / (ex.clip_id + ".png"),
                      hstack({ex.frames.front(), ex.guidance.frames[e], generated[e], ex.frames[e]}));
    }
    if (report.clips.empty())
        throw EmptySplitError(fmt::format("no clips in split '{}' ({} clips examined)", to_string(options.split),
                                          examples.size()));
    for (Split s : {Split::extensive, Split::limited, Split::all}) report.summaries.push_back(summarize(report.clips, s));
    return report;
}

std::string format_report_lines(const EvalReport& report) {
    std::string out;
    for (const auto& c : report.clips)
        out += fmt::format("{} {} {:.6f} {:.6f} {:.6f} {:.6f}\n", c.clip_id, to_string(c.motion), c.psnr_endpoint,
                           c.ssim_endpoint, c.psnr_mean, c.ssim_mean);
    return out;
}

std::string format_report_summary(const EvalReport& report) {
    std::string out = fmt::format("{:<10} {:>5}  {:>18}  {:>16}  {:>18}  {:>16}\n", "split", "clips", "PSNR end (dB)",
                                  "SSIM end", "PSNR mean (dB)", "SSIM mean");
    for (const auto& s : report.summaries) {
        if (s.count == 0) continue;
        out += fmt::format("{:<10} {:>5}  {:>8.3f} ± {:<7.3f}  {:>7.4f} ± {:<6.4f}  {:>8.3f} ± {:<7.3f}  {:>7.4f} ± {:<6.4f}\n",
                           to_string(s.split), s.count, s.psnr_endpoint.mean, s.psnr_endpoint.std, s.ssim_endpoint.mean,
                           s.ssim_endpoint.std, s.psnr_mean.mean, s.psnr_mean.std, s.ssim_mean.mean, s.ssim_mean.std);
    }
    return out;
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "# camgen evaluation report, split " << to_string(report.split) << "\n";
    for (size_t pos = 0; pos < report.config.size();) {
        const size_t nl = report.config.find('\n', pos);
        out << "# config " << report.config.substr(pos, nl - pos) << "\n";
        pos = nl == std::string::npos ? report.config.size() : nl + 1;
    }
    out << "# clip_id class psnr_endpoint ssim_endpoint psnr_mean ssim_mean\n";
    out << format_report_lines(report);
    out << "\n";
    std::string summary = format_report_summary(report);
    for (size_t pos = 0; pos < summary.size();) {
        const size_t nl = summary.find('\n', pos);
        out << "# " << summary.substr(pos, nl - pos) << "\n";
        pos = nl == std::string::npos ? summary.size() : nl + 1;
    }
}

} // namespace camgen
