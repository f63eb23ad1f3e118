#include "camgen/config.hpp"
#include "camgen/errors.hpp"
#include "camgen/scenes.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace camgen {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("config: bad value for '" + key + "': " + value);
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    // from_chars for double is missing from older libstdc++
    size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &used);
    } catch (const std::logic_error&) {
        used = 0;
    }
    if (used == 0 || used != value.size()) throw std::invalid_argument("config: bad value for '" + key + "': " + value);
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("config: bad boolean for '" + key + "': " + value);
}

} // namespace

TrainMode parse_train_mode(std::string_view name) {
    if (name == "scratch") return TrainMode::scratch;
    if (name == "anchor_only") return TrainMode::anchor_only;
    throw std::invalid_argument("unknown training mode '" + std::string(name) + "'");
}

std::string_view to_string(TrainMode m) { return m == TrainMode::scratch ? "scratch" : "anchor_only"; }

LrSchedule parse_lr_schedule(std::string_view name) {
    if (name == "constant") return LrSchedule::constant;
    if (name == "cosine") return LrSchedule::cosine;
    throw std::invalid_argument("unknown learning-rate schedule '" + std::string(name) + "'");
}

std::string_view to_string(LrSchedule s) { return s == LrSchedule::constant ? "constant" : "cosine"; }

ModelShape RunConfig::model_shape() const {
    ModelShape s;
    s.height = resolution;
    s.width = resolution;
    s.patch = patch;
    s.dim = dim;
    s.heads = heads;
    s.blocks = blocks;
    s.max_frames = max_frames;
    return s;
}

SupervisionConfig RunConfig::supervision() const {
    SupervisionConfig s;
    s.gamma = disable_tegs ? 0.0 : gamma;
    s.n_frames = n_frames;
    s.n_extension = n_extension;
    s.sparse_source_len = sparse_source_len;
    return s;
}

WeightMode RunConfig::weight_mode() const {
    if (intermediate_weights_zero) return WeightMode::extension_only;
    return disable_tegs ? WeightMode::uniform : WeightMode::endpoint;
}

ForwardOptions RunConfig::forward_options() const {
    ForwardOptions o;
    o.use_anchor = !disable_anchor;
    return o;
}

double RunConfig::learning_rate_at(int iteration) const {
    if (lr_schedule == LrSchedule::constant || iterations <= 0) return learning_rate;
    const double progress = std::min(1.0, static_cast<double>(iteration) / iterations);
    return 0.5 * learning_rate * (1.0 + std::cos(std::numbers::pi * progress));
}

void RunConfig::validate() const {
    model_shape().validate();
    supervision().validate();
    if (n_frames > max_frames) throw std::invalid_argument("config: n_frames exceeds max_frames");
    if (!(alpha >= 0.0)) throw std::invalid_argument("config: alpha must be >= 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning_rate must be positive");
    if (batch < 1) throw std::invalid_argument("config: batch must be >= 1");
    if (iterations < 0) throw std::invalid_argument("config: iterations must be >= 0");
    if (checkpoint_every < 0) throw std::invalid_argument("config: checkpoint_every must be >= 0");
    if (sample_steps < 1) throw std::invalid_argument("config: sample_steps must be >= 1");
    if (profile != "cycle") parse_motion_profile(profile);
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "resolution") resolution = parse_number<int>(key, value);
    else if (key == "patch") patch = parse_number<int>(key, value);
    else if (key == "dim") dim = parse_number<int>(key, value);
    else if (key == "heads") heads = parse_number<int>(key, value);
    else if (key == "blocks") blocks = parse_number<int>(key, value);
    else if (key == "max_frames") max_frames = parse_number<int>(key, value);
    else if (key == "alpha") alpha = parse_double(key, value);
    else if (key == "n_frames") n_frames = parse_number<int>(key, value);
    else if (key == "n_extension") n_extension = parse_number<int>(key, value);
    else if (key == "sparse_source_len") sparse_source_len = parse_number<int>(key, value);
    else if (key == "gamma") gamma = parse_double(key, value);
    else if (key == "learning_rate") learning_rate = parse_double(key, value);
    else if (key == "lr_schedule") lr_schedule = parse_lr_schedule(value);
    else if (key == "batch") batch = parse_number<int>(key, value);
    else if (key == "iterations") iterations = parse_number<int>(key, value);
    else if (key == "checkpoint_every") checkpoint_every = parse_number<int>(key, value);
    else if (key == "mode") mode = parse_train_mode(value);
    else if (key == "init_checkpoint") init_checkpoint = value;
    else if (key == "sample_steps") sample_steps = parse_number<int>(key, value);
    else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
    else if (key == "dataset") dataset = value;
    else if (key == "profile") profile = value;
    else if (key == "disable_guidance") disable_guidance = parse_bool(key, value);
    else if (key == "disable_anchor") disable_anchor = parse_bool(key, value);
    else if (key == "disable_tegs") disable_tegs = parse_bool(key, value);
    else if (key == "intermediate_weights_zero") intermediate_weights_zero = parse_bool(key, value);
    else throw std::invalid_argument("config: unknown key '" + key + "'");
}

std::map<std::string, std::string> RunConfig::to_map() const {
    const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    return {
        {"resolution", fmt::format("{}", resolution)},
        {"patch", fmt::format("{}", patch)},
        {"dim", fmt::format("{}", dim)},
        {"heads", fmt::format("{}", heads)},
        {"blocks", fmt::format("{}", blocks)},
        {"max_frames", fmt::format("{}", max_frames)},
        {"alpha", fmt::format("{}", alpha)},
        {"n_frames", fmt::format("{}", n_frames)},
        {"n_extension", fmt::format("{}", n_extension)},
        {"sparse_source_len", fmt::format("{}", sparse_source_len)},
        {"gamma", fmt::format("{}", gamma)},
        {"learning_rate", fmt::format("{}", learning_rate)},
        {"lr_schedule", std::string(to_string(lr_schedule))},
        {"batch", fmt::format("{}", batch)},
        {"iterations", fmt::format("{}", iterations)},
        {"checkpoint_every", fmt::format("{}", checkpoint_every)},
        {"mode", std::string(to_string(mode))},
        {"init_checkpoint", init_checkpoint},
        {"sample_steps", fmt::format("{}", sample_steps)},
        {"seed", fmt::format("{}", seed)},
        {"dataset", dataset},
        {"profile", profile},
        {"disable_guidance", b(disable_guidance)},
        {"disable_anchor", b(disable_anchor)},
        {"disable_tegs", b(disable_tegs)},
        {"intermediate_weights_zero", b(intermediate_weights_zero)},
    };
}

std::string format_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& [key, value] : cfg.to_map()) out += key + " = " + value + "\n";
    return out;
}

RunConfig parse_config(const std::string& text, RunConfig base) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(fmt::format("config line {}: expected key = value", line_no));
        base.set(trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)));
    }
    return base;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << format_config(cfg);
}

} // namespace camgen
