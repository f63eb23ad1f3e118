#pragma once

#include "camgen/backbone.hpp"
#include "camgen/config.hpp"
#include "camgen/example.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace camgen {

/// Adam with beta = (0.9, 0.999), eps = 1e-8 and no weight decay.
class Adam {
public:
    Adam(const ModelParams<float>& params, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8);

    /// Updates every tensor whose group is listed in `trainable`.
    void step(ModelParams<float>& params, const ModelParams<float>& grads, const std::vector<ParamGroup>& trainable);
    int steps() const { return t_; }
    void set_learning_rate(double lr) { lr_ = lr; }

private:
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    ModelParams<float> m_, v_;
};

std::vector<ParamGroup> trainable_groups(const RunConfig& cfg);

struct StepRecord {
    int iteration = 0;
    std::uint64_t batch_seed = 0;
    double loss = 0.0;                // sum_i w_i * frame_mse[i], the batch-mean weighted loss
    std::vector<double> frame_mse;    // batch mean of unweighted per-frame MSE, frames 1..N-1
};

/// Starting parameters for a run: fresh initialization, or init_checkpoint
/// (with anchors re-attached in anchor_only mode).
ModelParams<float> initial_params(const RunConfig& cfg);

class Trainer {
public:
    Trainer(RunConfig cfg, const std::vector<Example>& examples, ModelParams<float> params);

    /// One optimizer iteration. Throws NumericalError on a non-finite loss.
    StepRecord step();

    const ModelParams<float>& params() const { return params_; }
    const RunConfig& config() const { return cfg_; }
    const std::vector<double>& weights() const { return weights_; }
    int iteration() const { return iteration_; }

private:
    RunConfig cfg_;
    const std::vector<Example>& examples_;
    ModelParams<float> params_;
    ModelParams<float> grads_;
    Adam adam_;
    std::vector<ParamGroup> trainable_;
    std::vector<double> weights_;
    int iteration_ = 0;
};

/// Seed of the batch drawn at `iteration`.
std::uint64_t batch_seed(std::uint64_t run_seed, int iteration);

struct TrainResult {
    ModelParams<float> params;
    std::vector<StepRecord> history;
};

/// Full loop. When `output_dir` is non-empty it receives config.txt, loss.log,
/// periodic checkpoint_XXXXXX.bin files and the final checkpoint.bin.
TrainResult train(const RunConfig& cfg, const std::vector<Example>& examples, const std::filesystem::path& output_dir,
                  const std::function<void(const StepRecord&)>& on_step = {});

} // namespace camgen
