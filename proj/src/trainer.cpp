#include "camgen/trainer.hpp"
#include "camgen/checkpoint.hpp"
#include "camgen/errors.hpp"
#include "camgen/flow.hpp"
#include "camgen/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace camgen {

Adam::Adam(const ModelParams<float>& params, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(params.zeros_like()), v_(params.zeros_like()) {}

void Adam::step(ModelParams<float>& params, const ModelParams<float>& grads, const std::vector<ParamGroup>& trainable) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, t_);
    const double c2 = 1.0 - std::pow(beta2_, t_);
    auto p = params.views();
    const auto g = grads.views();
    auto m = m_.views();
    auto v = v_.views();
    for (size_t k = 0; k < p.size(); ++k) {
        if (std::find(trainable.begin(), trainable.end(), p[k].group) == trainable.end()) continue;
        const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
        for (size_t i = 0; i < p[k].size(); ++i) {
            const float gi = g[k].data[i];
            m[k].data[i] = b1 * m[k].data[i] + (1.0f - b1) * gi;
            v[k].data[i] = b2 * v[k].data[i] + (1.0f - b2) * gi * gi;
            const double mhat = m[k].data[i] / c1;
            const double vhat = v[k].data[i] / c2;
            p[k].data[i] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

std::vector<ParamGroup> trainable_groups(const RunConfig& cfg) {
    if (cfg.mode == TrainMode::anchor_only) return {ParamGroup::anchor};
    return {ParamGroup::base, ParamGroup::anchor};
}

ModelParams<float> initial_params(const RunConfig& cfg) {
    if (cfg.init_checkpoint.empty()) {
        if (cfg.mode == TrainMode::anchor_only)
            throw std::invalid_argument("anchor_only training needs init_checkpoint (a base run to fine-tune)");
        return ModelParams<float>::init(cfg.model_shape(), mix_seed(cfg.seed, 0x696e6974ull), cfg.alpha);
    }
    Checkpoint ck = load_checkpoint(cfg.init_checkpoint, cfg.model_shape());
    if (cfg.mode == TrainMode::anchor_only) ck.params.reattach_anchors(cfg.alpha);
    return std::move(ck.params);
}

std::uint64_t batch_seed(std::uint64_t run_seed, int iteration) {
    return mix_seed(run_seed, 0x62617463680000ull + static_cast<std::uint64_t>(iteration));
}

Trainer::Trainer(RunConfig cfg, const std::vector<Example>& examples, ModelParams<float> params)
    : cfg_(std::move(cfg)),
      examples_(examples),
      params_(std::move(params)),
      grads_(params_.zeros_like()),
      adam_(params_, cfg_.learning_rate),
      trainable_(trainable_groups(cfg_)),
      weights_(frame_weights(cfg_.supervision(), cfg_.weight_mode())) {
    cfg_.validate();
    if (examples_.empty()) throw DataError("training set is empty");
    if (!(params_.shape == cfg_.model_shape())) throw VersionError("parameters do not match the configured model shape");
    for (const auto& ex : examples_)
        if (ex.frame_latents.rows() != cfg_.n_frames) throw VersionError("example frame count differs from n_frames");
}

StepRecord Trainer::step() {
    StepRecord rec;
    rec.iteration = iteration_;
    rec.batch_seed = batch_seed(cfg_.seed, iteration_);
    rec.frame_mse.assign(weights_.size(), 0.0);

    for (auto& v : grads_.views()) std::fill(v.data, v.data + v.size(), 0.0f);

    Rng rng(rec.batch_seed);
    const int fv = params_.shape.frame_values();
    const float inv_batch = 1.0f / static_cast<float>(cfg_.batch);
    const ForwardOptions options = cfg_.forward_options();
    ForwardCache<float> cache;
    for (int b = 0; b < cfg_.batch; ++b) {
        const Example& ex = examples_[rng.integer(0, static_cast<int>(examples_.size()) - 1)];
        const float t = static_cast<float>(rng.unit());
        const Mat<float> eps = gaussian_noise<float>(cfg_.n_frames, fv, rng.next());

        SampleInput<float> in;
        in.target = blend<float>(ex.frame_latents, eps, t);
        if (!cfg_.disable_guidance) in.guidance = ex.guidance_latents;
        in.conditioning = ex.frame_latents.topRows(1);
        in.t = t;

        const Mat<float> pred = forward(params_, in, options, &cache);
        Mat<float> grad;
        const FlowLoss fl = flow_loss<float>(pred, ex.frame_latents, eps, weights_, &grad);
        grad *= inv_batch;
        backward(params_, cache, grad, grads_);

        for (size_t i = 0; i < fl.frame_mse.size(); ++i) rec.frame_mse[i] += fl.frame_mse[i] / cfg_.batch;
    }
    // Same value as the batch mean of the weighted losses, and exactly
    // recomputable from the logged per-frame terms.
    for (size_t i = 0; i < weights_.size(); ++i) rec.loss += weights_[i] * rec.frame_mse[i];
    if (!std::isfinite(rec.loss))
        throw NumericalError(fmt::format("non-finite loss at iteration {} (batch seed {})", iteration_, rec.batch_seed));

    adam_.set_learning_rate(cfg_.learning_rate_at(iteration_));
    adam_.step(params_, grads_, trainable_);
    ++iteration_;
    return rec;
}

namespace {

std::string format_step(const StepRecord& r) {
    std::string line = fmt::format("{} {} {:.17g}", r.iteration, r.batch_seed, r.loss);
    for (double m : r.frame_mse) line += fmt::format(" {:.17g}", m);
    return line;
}

} // namespace

TrainResult train(const RunConfig& cfg, const std::vector<Example>& examples, const std::filesystem::path& output_dir,
                  const std::function<void(const StepRecord&)>& on_step) {
    Trainer trainer(cfg, examples, initial_params(cfg));
    const bool write = !output_dir.empty();

    std::ofstream log;
    if (write) {
        std::filesystem::create_directories(output_dir);
        save_config(output_dir / "config.txt", cfg);
        log.open(output_dir / "loss.log");
        if (!log) throw DataError("cannot write " + (output_dir / "loss.log").string());
        log << "# camgen training log\n";
        std::istringstream cfg_lines(format_config(cfg));
        for (std::string line; std::getline(cfg_lines, line);) log << "# config " << line << "\n";
        log << "# weights";
        for (double w : trainer.weights()) log << fmt::format(" {:.17g}", w);
        log << "\n# iteration batch_seed loss";
        for (size_t i = 1; i <= trainer.weights().size(); ++i) log << " mse_" << i;
        log << "\n";
    }

    TrainResult result;
    for (int it = 0; it < cfg.iterations; ++it) {
        StepRecord rec = trainer.step();
        if (write) log << format_step(rec) << "\n" << std::flush;
        if (on_step) on_step(rec);
        result.history.push_back(std::move(rec));
        if (write && cfg.checkpoint_every > 0 && (it + 1) % cfg.checkpoint_every == 0 && it + 1 < cfg.iterations)
            save_checkpoint(output_dir / fmt::format("checkpoint_{:06d}.bin", it + 1), cfg, trainer.params());
    }
    if (write) save_checkpoint(output_dir / "checkpoint.bin", cfg, trainer.params());
    result.params = trainer.params();
    return result;
}

} // namespace camgen
