#pragma once

#include "camgen/backbone.hpp"
#include "camgen/supervision.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace camgen {

enum class TrainMode { scratch, anchor_only };
enum class LrSchedule { constant, cosine };

TrainMode parse_train_mode(std::string_view name);
std::string_view to_string(TrainMode m);
LrSchedule parse_lr_schedule(std::string_view name);
std::string_view to_string(LrSchedule s);

/// Every tunable of a run. Serialized as flat `key = value` lines.
struct RunConfig {
    // model
    int resolution = 32;
    int patch = 4;
    int dim = 64;
    int heads = 4;
    int blocks = 4;
    int max_frames = 32;
    double alpha = 1.0;

    // frame layout and loss weighting
    int n_frames = 9;
    int n_extension = 2;
    int sparse_source_len = 81;
    double gamma = 0.01;

    // optimization
    double learning_rate = 1e-4;
    LrSchedule lr_schedule = LrSchedule::constant;  // cosine: decays to 0 at `iterations`
    int batch = 2;
    int iterations = 2000;
    int checkpoint_every = 500;
    TrainMode mode = TrainMode::scratch;
    std::string init_checkpoint;  // required for anchor_only

    // sampling
    int sample_steps = 20;

    std::uint64_t seed = 0;
    std::string dataset;
    std::string profile = "cycle";  // gen-data: dolly|orbit|truck|mixed|cycle

    // ablations
    bool disable_guidance = false;
    bool disable_anchor = false;
    bool disable_tegs = false;
    bool intermediate_weights_zero = false;

    ModelShape model_shape() const;
    SupervisionConfig supervision() const;
    WeightMode weight_mode() const;
    ForwardOptions forward_options() const;
    /// Step size used at `iteration` (0-based).
    double learning_rate_at(int iteration) const;

    /// Throws std::invalid_argument on inconsistent values.
    void validate() const;

    /// Applies one key/value pair; unknown keys and malformed values throw.
    void set(const std::string& key, const std::string& value);
    std::map<std::string, std::string> to_map() const;

    bool operator==(const RunConfig&) const = default;
};

std::string format_config(const RunConfig& cfg);
/// Starts from `base` and applies every line of `text`.
RunConfig parse_config(const std::string& text, RunConfig base = {});

RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
void save_config(const std::filesystem::path& path, const RunConfig& cfg);

} // namespace camgen
