#include "camgen/supervision.hpp"

#include <cmath>
#include <string>

namespace camgen {

void SupervisionConfig::validate() const {
    if (!(gamma >= 0)) throw std::invalid_argument("gamma must be >= 0");
    if (n_frames < 2) throw std::invalid_argument("n_frames must be >= 2");
    if (n_extension < 1 || n_extension >= n_frames)
        throw std::invalid_argument("n_extension must satisfy 1 <= K < n_frames");
    if (sparse_source_len < trajectory_frames())
        throw std::invalid_argument("sparse_source_len is shorter than the trajectory frame count");
}

double loss_weight(int i, int n, double gamma) {
    if (n < 2) throw std::invalid_argument("loss_weight: N must be >= 2");
    if (i == 0) throw std::invalid_argument("loss_weight: frame 0 is conditioning and carries no loss");
    if (i < 1 || i > n - 1) throw std::invalid_argument("loss_weight: frame index out of range");
    const double x = 2.0 * i / (n - 1) - 1.0;
    return 1.0 + gamma * x * x;
}

std::vector<double> frame_weights(const SupervisionConfig& cfg, WeightMode mode) {
    cfg.validate();
    const int n = cfg.n_frames;
    const int first_extension = n - cfg.n_extension;
    std::vector<double> w(n - 1);
    for (int i = 1; i < n; ++i) {
        const bool extension = i >= first_extension;
        switch (mode) {
            case WeightMode::endpoint: w[i - 1] = extension ? loss_weight(n - 1, n, cfg.gamma) : loss_weight(i, n, cfg.gamma); break;
            case WeightMode::uniform: w[i - 1] = 1.0; break;
            case WeightMode::extension_only: w[i - 1] = extension ? 1.0 : 0.0; break;
        }
    }
    return w;
}

std::vector<int> sparse_sample_indices(int raw_length, int n) {
    if (n < 2) throw std::invalid_argument("sparse_sample_indices: N must be >= 2");
    if (n > raw_length)
        throw std::invalid_argument("sparse_sample_indices: N=" + std::to_string(n) + " exceeds T=" + std::to_string(raw_length));
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) {
        // std::round rounds half away from zero.
        idx[i] = static_cast<int>(std::round(static_cast<double>(i) * (raw_length - 1) / (n - 1)));
    }
    return idx;
}

} // namespace camgen
