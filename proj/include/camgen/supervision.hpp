#pragma once

#include <stdexcept>
#include <vector>

namespace camgen {

struct SupervisionConfig {
    double gamma = 0.01;        // endpoint penalty strength
    int n_frames = 9;           // N, total sequence length after extension
    int n_extension = 2;        // K, trailing timesteps holding the target view
    int sparse_source_len = 81; // raw clip length T

    void validate() const;
    /// Unique trajectory poses before extension: N - K + 1.
    int trajectory_frames() const { return n_frames - n_extension + 1; }
};

/// w(i) = 1 + gamma * (2i/(N-1) - 1)^2 for 1 <= i <= N-1.
double loss_weight(int i, int n, double gamma);

enum class WeightMode {
    endpoint,               // quadratic law; the K extension frames share w(N-1)
    uniform,                // all ones
    extension_only,         // zero on intermediate frames, one on the K extension frames
};

/// Weights for supervised frames 1..N-1 (element 0 is frame 1).
std::vector<double> frame_weights(const SupervisionConfig& cfg, WeightMode mode);

/// round(i (T-1)/(N-1)), rounding half away from zero.
std::vector<int> sparse_sample_indices(int raw_length, int n);

/// Appends K-1 copies of the last element.
template <typename T>
std::vector<T> apply_temporal_extension(std::vector<T> seq, int k) {
    if (seq.empty()) throw std::invalid_argument("apply_temporal_extension: empty sequence");
    if (k < 1) throw std::invalid_argument("apply_temporal_extension: K must be >= 1");
    const T last = seq.back();
    seq.reserve(seq.size() + k - 1);
    for (int i = 1; i < k; ++i) seq.push_back(last);
    return seq;
}

} // namespace camgen
