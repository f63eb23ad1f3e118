#pragma once

#include "camgen/backbone.hpp"
#include "camgen/image.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace camgen {

/// z_t = (1 - t) z0 + t eps, as built.
template <typename S>
struct FlowState {
    Mat<S> z0, eps, zt;
    S t = S(0);

    static FlowState make(Mat<S> z0, Mat<S> eps, S t);
};

template <typename S>
Mat<S> blend(const Mat<S>& z0, const Mat<S>& eps, S t);

/// v = eps - z0.
template <typename S>
Mat<S> velocity_target(const Mat<S>& z0, const Mat<S>& eps);

struct FlowLoss {
    double total = 0.0;
    std::vector<double> frame_mse;  // frames 1..F-1, unweighted
};

/// sum_i w_i * mean((pred_i - (eps_i - z0_i))^2) over frames i >= 1; row 0 is
/// the conditioning frame and is skipped. `weights` has F-1 entries. When
/// `grad` is given it receives dL/dpred.
template <typename S>
FlowLoss flow_loss(const Mat<S>& pred, const Mat<S>& z0, const Mat<S>& eps, const std::vector<double>& weights,
                   Mat<S>* grad = nullptr);

template <typename S>
using VelocityFn = std::function<Mat<S>(const Mat<S>& zt, S t)>;

/// Uniform-step Euler integration from t=1 to t=0 starting at `noise`; row 0
/// is held at `conditioning` before every evaluation and at the end.
template <typename S>
Mat<S> euler_sample(const VelocityFn<S>& velocity, Mat<S> noise, const Mat<S>& conditioning, int steps);

/// Standard-normal latents drawn from `seed`.
template <typename S>
Mat<S> gaussian_noise(int rows, int cols, std::uint64_t seed);

/// Generates F target frames with the trained model. `guidance` may have zero
/// rows (no geometric context).
template <typename S>
Mat<S> sample(const ModelParams<S>& params, const Mat<S>& guidance, const Mat<S>& conditioning, int frames, int steps,
              std::uint64_t seed, const ForwardOptions& options = {});

// Pixel <-> latent mapping: latent = 2 * pixel - 1.
Mat<float> to_latents(const std::vector<Image>& frames);
Mat<float> to_latent(const Image& frame);
std::vector<Image> from_latents(const Mat<float>& latents, int height, int width);

} // namespace camgen
