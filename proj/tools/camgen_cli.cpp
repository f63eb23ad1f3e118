#include "camgen/checkpoint.hpp"
#include "camgen/config.hpp"
#include "camgen/errors.hpp"
#include "camgen/evaluate.hpp"
#include "camgen/example.hpp"
#include "camgen/flow.hpp"
#include "camgen/guidance.hpp"
#include "camgen/instructions.hpp"
#include "camgen/pointcloud.hpp"
#include "camgen/scenes.hpp"
#include "camgen/supervision.hpp"
#include "camgen/trainer.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace camgen;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortcut flags; each one writes a config key. Anything else goes through --set.
struct ConfigFlag {
    const char* flag;
    const char* key;
    const char* help;
    bool boolean;
};

constexpr ConfigFlag kConfigFlags[] = {
    {"--seed", "seed", "Seed for every random draw of the command", false},
    {"--resolution", "resolution", "Frame width and height in pixels", false},
    {"--iterations", "iterations", "Training iterations", false},
    {"--batch", "batch", "Clips per training iteration", false},
    {"--learning-rate", "learning_rate", "Optimizer step size", false},
    {"--lr-schedule", "lr_schedule", "constant|cosine (decays to 0 at the last iteration)", false},
    {"--gamma", "gamma", "Endpoint loss-weight strength", false},
    {"--alpha", "alpha", "Anchor-attention scale", false},
    {"--n-frames", "n_frames", "Frames per training sequence, extension included", false},
    {"--n-extension", "n_extension", "Trailing frames holding the endpoint", false},
    {"--length", "sparse_source_len", "Raw clip length before sparse sampling", false},
    {"--profile", "profile", "gen-data camera motion: dolly|orbit|truck|mixed|cycle", false},
    {"--mode", "mode", "Training mode: scratch|anchor_only", false},
    {"--init-checkpoint", "init_checkpoint", "Starting checkpoint (required for anchor_only)", false},
    {"--steps", "sample_steps", "Euler sampling steps", false},
    {"--checkpoint-every", "checkpoint_every", "Iterations between periodic checkpoints (0 = off)", false},
    {"--disable-guidance", "disable_guidance", "Train and sample without guidance frames", true},
    {"--disable-anchor", "disable_anchor", "Skip the anchor-attention branch", true},
    {"--disable-tegs", "disable_tegs", "Uniform loss weights (gamma = 0)", true},
    {"--intermediate-weights-zero", "intermediate_weights_zero", "Supervise only the extension frames", true},
};

struct ConfigArgs {
    std::string file;
    std::vector<std::string> sets;
    std::map<std::string, std::string> values;
    std::map<std::string, bool> switches;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("--config", args.file, "Config file of key = value lines")->check(CLI::ExistingFile);
    cmd->add_option("--set", args.sets, "Override one config key, as key=value (repeatable)");
    for (const ConfigFlag& f : kConfigFlags) {
        if (f.boolean) cmd->add_flag(f.flag, args.switches[f.key], f.help);
        else cmd->add_option(f.flag, args.values[f.key], f.help);
    }
}

/// defaults (or a checkpoint's config) < --config file < flags.
RunConfig resolve_config(CLI::App* cmd, const ConfigArgs& args, RunConfig base = {}) {
    RunConfig cfg = args.file.empty() ? std::move(base) : load_config(args.file, std::move(base));
    for (const ConfigFlag& f : kConfigFlags) {
        if (cmd->count(f.flag) == 0) continue;
        cfg.set(f.key, f.boolean ? "true" : args.values.at(f.key));
    }
    for (const std::string& kv : args.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

void prepare_output(const fs::path& dir, bool force) {
    if (fs::exists(dir) && !fs::is_directory(dir)) throw DataError(dir.string() + " exists and is not a directory");
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!force) throw DataError(dir.string() + " is not empty (use --force to replace it)");
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
}

/// Effective config as a loadable file, with the command's own arguments as comments.
void write_run_config(const fs::path& path, const RunConfig& cfg, const std::vector<std::string>& notes) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& n : notes) out << "# " << n << "\n";
    out << format_config(cfg);
}

void write_sequence(const fs::path& dir, const std::vector<Image>& frames) {
    fs::create_directories(dir);
    for (size_t i = 0; i < frames.size(); ++i) write_png(dir / fmt::format("{:04d}.png", i), frames[i]);
}

void write_masks(const fs::path& dir, const std::vector<Mask>& masks) {
    fs::create_directories(dir);
    for (size_t i = 0; i < masks.size(); ++i) write_mask_png(dir / fmt::format("{:04d}.png", i), masks[i]);
}

// Input view for sample / render-guidance: a dataset clip's first frame, or a
// PNG plus a raw float32 depth map.
struct InputView {
    Image image;
    DepthMap depth;
    Intrinsics intrinsics;
    CameraPose pose;
};

struct InputArgs {
    std::string clip;
    std::string image;
    std::string depth;
    std::string instructions;
    std::string ply;
};

void add_input_options(CLI::App* cmd, InputArgs& in) {
    auto* clip = cmd->add_option("--clip", in.clip, "Dataset clip directory; frame 0 is the input view");
    auto* image = cmd->add_option("--image", in.image, "Input PNG")->check(CLI::ExistingFile);
    auto* depth = cmd->add_option("--depth", in.depth, "Raw little-endian float32 depth, H*W values, <= 0 = invalid")
                      ->check(CLI::ExistingFile);
    image->needs(depth);
    depth->needs(image);
    clip->excludes(image);
    cmd->add_option("--instructions", in.instructions, "Camera instructions, e.g. dolly+0.5,orbit-20")->required();
    cmd->add_option("--ply", in.ply, "Also write the input point cloud as ASCII PLY");
}

InputView load_input(const InputArgs& in) {
    InputView v;
    if (!in.clip.empty()) {
        const Clip clip = read_clip(in.clip);
        v.image = clip.frames.front();
        v.depth = clip.depths.front();
        v.intrinsics = clip.intrinsics;
        v.pose = clip.trajectory.front();
    } else if (!in.image.empty()) {
        v.image = read_png(in.image);
        v.depth = read_depths(in.depth, 1, v.image.height, v.image.width).front();
        v.intrinsics = Intrinsics::centered(v.image.width, v.image.height);
        v.pose = CameraPose::identity();
    } else {
        throw UsageError("give --clip or --image with --depth");
    }
    return v;
}

/// Instruction target, interpolated over the unique frames and extended to N.
Trajectory instructed_trajectory(const InputView& v, const PointCloud& cloud, const std::string& text,
                                 const RunConfig& cfg) {
    const SupervisionConfig sup = cfg.supervision();
    const Eigen::Vector3d pivot = cloud.empty() ? Eigen::Vector3d::Zero() : cloud.centroid();
    const CameraPose target = apply_instructions(v.pose, parse_instructions(text), pivot);
    Trajectory t = interpolate_trajectory(v.pose, target, sup.trajectory_frames());
    t.poses = apply_temporal_extension(t.poses, sup.n_extension);
    return t;
}

int cmd_gen_data(CLI::App* cmd, const ConfigArgs& ca, const std::string& out, int n_clips, bool force) {
    const RunConfig cfg = resolve_config(cmd, ca);
    if (n_clips < 1) throw UsageError("n_clips must be >= 1");
    prepare_output(out, force);
    generate_dataset(out, cfg, n_clips);
    spdlog::info("wrote {} clips (seeds {}..{}) to {}", n_clips, cfg.seed, cfg.seed + n_clips - 1, out);
    return 0;
}

int cmd_train(CLI::App* cmd, const ConfigArgs& ca, const std::string& dataset, const std::string& out, bool force,
              int log_every) {
    RunConfig cfg = resolve_config(cmd, ca);
    if (!dataset.empty()) cfg.dataset = dataset;
    if (cfg.dataset.empty()) throw UsageError("no dataset: pass --dataset or set dataset in the config");
    const std::vector<Example> examples = load_examples(cfg.dataset, cfg);
    spdlog::info("{} clips from {}; {} iterations, batch {}", examples.size(), cfg.dataset, cfg.iterations, cfg.batch);
    prepare_output(out, force);
    const TrainResult r = train(cfg, examples, out, [&](const StepRecord& s) {
        if (log_every > 0 && (s.iteration % log_every == 0 || s.iteration + 1 == cfg.iterations))
            spdlog::info("iteration {:>6}  loss {:.6f}", s.iteration, s.loss);
    });
    spdlog::info("checkpoint written to {}", (fs::path(out) / "checkpoint.bin").string());
    return 0;
}

int cmd_sample(CLI::App* cmd, const ConfigArgs& ca, const std::string& checkpoint, const InputArgs& in,
               const std::string& out, bool force) {
    const Checkpoint base = load_checkpoint(checkpoint);
    const RunConfig cfg = resolve_config(cmd, ca, base.config);
    if (!(cfg.model_shape() == base.params.shape))
        throw VersionError("the effective config describes a different model than " + checkpoint);

    const InputView v = load_input(in);
    if (v.image.width != cfg.resolution || v.image.height != cfg.resolution)
        throw VersionError(fmt::format("input is {}x{}, model expects {}x{}", v.image.width, v.image.height,
                                       cfg.resolution, cfg.resolution));
    const PointCloud cloud = unproject(v.depth, v.pose, v.intrinsics, v.image);

    Example ex;
    ex.clip_id = "sample";
    ex.trajectory = instructed_trajectory(v, cloud, in.instructions, cfg);
    ex.trajectory_frames = cfg.supervision().trajectory_frames();
    ex.guidance = build_guidance(v.image, v.depth, ex.trajectory, v.intrinsics);
    ex.frame_latents = to_latent(v.image);
    ex.guidance_latents = to_latents(ex.guidance.frames);
    const std::vector<Image> frames = generate_frames(base.params, cfg, ex, cfg.sample_steps, cfg.seed);

    prepare_output(out, force);
    write_sequence(fs::path(out) / "frames", frames);
    write_sequence(fs::path(out) / "guidance", ex.guidance.frames);
    write_masks(fs::path(out) / "masks", ex.guidance.masks);
    if (!in.ply.empty()) write_ply(in.ply, cloud);
    write_run_config(fs::path(out) / "config.txt", cfg,
                     {"camgen sample", "checkpoint " + checkpoint, "instructions " + in.instructions,
                      fmt::format("mask_ratio_final {:.6f} ({})", ex.guidance.mask_ratio_final,
                                  to_string(classify_motion(ex.guidance.mask_ratio_final)))});
    spdlog::info("{} frames written to {} (final mask ratio {:.3f})", frames.size(), out, ex.guidance.mask_ratio_final);
    return 0;
}

int cmd_eval(CLI::App* cmd, const ConfigArgs& ca, const std::string& checkpoint, bool copy_guidance,
             const std::string& dataset, const std::string& split, const std::string& out, bool strips, bool force) {
    if (checkpoint.empty() == !copy_guidance) throw UsageError("give exactly one of --checkpoint and --copy-guidance");
    std::optional<Checkpoint> ck;
    if (!checkpoint.empty()) ck = load_checkpoint(checkpoint);
    RunConfig cfg = resolve_config(cmd, ca, ck ? ck->config : RunConfig{});
    if (ck && !(cfg.model_shape() == ck->params.shape))
        throw VersionError("the effective config describes a different model than " + checkpoint);
    if (!dataset.empty()) cfg.dataset = dataset;
    if (cfg.dataset.empty()) throw UsageError("no dataset: pass --dataset or set dataset in the config");

    EvalOptions opt;
    opt.split = parse_split(split);
    opt.copy_guidance = copy_guidance;
    opt.steps = cfg.sample_steps;
    opt.seed = cfg.seed;
    const std::vector<Example> examples = load_examples(cfg.dataset, cfg);
    prepare_output(out, force);
    if (strips) opt.strips_dir = fs::path(out) / "strips";
    const EvalReport report = evaluate(ck ? &ck->params : nullptr, cfg, examples, opt);
    write_report(fs::path(out) / "report.txt", report);
    std::fputs(format_report_summary(report).c_str(), stdout);
    return 0;
}

int cmd_classify(CLI::App* cmd, const ConfigArgs& ca, const std::string& dataset, std::optional<double> ratio) {
    if (ratio) {
        fmt::print("{}\n", to_string(classify_motion(*ratio)));
        return 0;
    }
    RunConfig cfg = resolve_config(cmd, ca);
    if (!dataset.empty()) cfg.dataset = dataset;
    if (cfg.dataset.empty()) throw UsageError("give --dataset or --mask-ratio");
    std::istringstream lines(format_config(cfg));
    for (std::string line; std::getline(lines, line);) fmt::print("# config {}\n", line);
    int extensive = 0, total = 0;
    for (const Example& ex : load_examples(cfg.dataset, cfg)) {
        fmt::print("{} {:.6f} {}\n", ex.clip_id, ex.guidance.mask_ratio_final, to_string(ex.motion));
        extensive += ex.motion == MotionClass::extensive;
        ++total;
    }
    fmt::print("# extensive {} limited {} total {}\n", extensive, total - extensive, total);
    return 0;
}

int cmd_render_guidance(CLI::App* cmd, const ConfigArgs& ca, const InputArgs& in, const std::string& out, bool force) {
    const RunConfig cfg = resolve_config(cmd, ca);
    const InputView v = load_input(in);
    const PointCloud cloud = unproject(v.depth, v.pose, v.intrinsics, v.image);
    const Trajectory traj = instructed_trajectory(v, cloud, in.instructions, cfg);
    const GuidanceSequence g = build_guidance(v.image, v.depth, traj, v.intrinsics);
    prepare_output(out, force);
    write_sequence(fs::path(out) / "guidance", g.frames);
    write_masks(fs::path(out) / "masks", g.masks);
    if (!in.ply.empty()) write_ply(in.ply, cloud);
    write_run_config(fs::path(out) / "config.txt", cfg,
                     {"camgen render-guidance", "instructions " + in.instructions,
                      fmt::format("mask_ratio_final {:.6f} ({})", g.mask_ratio_final,
                                  to_string(classify_motion(g.mask_ratio_final)))});
    fmt::print("{:.6f} {}\n", g.mask_ratio_final, to_string(classify_motion(g.mask_ratio_final)));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    spdlog::set_pattern("[%H:%M:%S] %v");
    CLI::App app{"camgen: camera-controlled video generation from a single RGB-D view"};
    app.require_subcommand(1);
    app.fallthrough();
    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

    ConfigArgs ca;
    bool force = false;

    auto* gen = app.add_subcommand("gen-data", "Write a synthetic RGB-D clip dataset");
    std::string gen_out;
    int n_clips = 0;
    gen->add_option("out", gen_out, "Output dataset directory")->required();
    gen->add_option("--n-clips", n_clips, "Number of clips")->required();
    gen->add_flag("--force", force, "Replace a non-empty output directory");
    add_config_options(gen, ca);

    auto* tr = app.add_subcommand("train", "Train a model on a dataset");
    std::string dataset, run_out;
    int log_every = 50;
    tr->add_option("--dataset", dataset, "Dataset directory (overrides the config's dataset)");
    tr->add_option("--out", run_out, "Run directory for config, loss log and checkpoints")->required();
    tr->add_option("--log-every", log_every, "Iterations between progress lines (0 = silent)");
    tr->add_flag("--force", force, "Replace a non-empty run directory");
    add_config_options(tr, ca);

    auto* sm = app.add_subcommand("sample", "Generate frames for a camera instruction");
    std::string checkpoint, sample_out;
    InputArgs input;
    sm->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required()->check(CLI::ExistingFile);
    sm->add_option("--out", sample_out, "Output directory")->required();
    sm->add_flag("--force", force, "Replace a non-empty output directory");
    add_input_options(sm, input);
    add_config_options(sm, ca);

    auto* ev = app.add_subcommand("eval", "Score a model (or the guidance renders) on a dataset");
    bool copy_guidance = false, strips = false;
    std::string split = "all", eval_out;
    ev->add_option("--checkpoint", checkpoint, "Trained checkpoint")->check(CLI::ExistingFile);
    ev->add_flag("--copy-guidance", copy_guidance, "Score the guidance renders instead of a model");
    ev->add_option("--dataset", dataset, "Dataset directory (overrides the config's dataset)");
    ev->add_option("--split", split, "extensive|limited|all");
    ev->add_option("--out", eval_out, "Output directory for report.txt")->required();
    ev->add_flag("--strips", strips, "Also write comparison strips");
    ev->add_flag("--force", force, "Replace a non-empty output directory");
    add_config_options(ev, ca);

    auto* cl = app.add_subcommand("classify", "Motion class of each clip, or of one mask ratio");
    std::optional<double> ratio;
    cl->add_option("--dataset", dataset, "Dataset directory");
    cl->add_option("--mask-ratio", ratio, "Classify a single final-frame mask ratio");
    add_config_options(cl, ca);

    auto* rg = app.add_subcommand("render-guidance", "Render guidance frames and hole masks for an instruction");
    std::string guide_out;
    rg->add_option("--out", guide_out, "Output directory")->required();
    rg->add_flag("--force", force, "Replace a non-empty output directory");
    add_input_options(rg, input);
    add_config_options(rg, ca);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    if (quiet) spdlog::set_level(spdlog::level::warn);

    try {
        if (*gen) return cmd_gen_data(gen, ca, gen_out, n_clips, force);
        if (*tr) return cmd_train(tr, ca, dataset, run_out, force, log_every);
        if (*sm) return cmd_sample(sm, ca, checkpoint, input, sample_out, force);
        if (*ev) return cmd_eval(ev, ca, checkpoint, copy_guidance, dataset, split, eval_out, strips, force);
        if (*cl) return cmd_classify(cl, ca, dataset, ratio);
        if (*rg) return cmd_render_guidance(rg, ca, input, guide_out, force);
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const DataError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const fs::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const NumericalError& e) {
        spdlog::error("{}", e.what());
        return 3;
    }
    return 1;
}
