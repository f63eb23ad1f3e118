#include "camgen/flow.hpp"
#include "camgen/random.hpp"

#include <stdexcept>

namespace camgen {

namespace {

template <typename S>
void require_same_shape(const Mat<S>& a, const Mat<S>& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

} // namespace

template <typename S>
FlowState<S> FlowState<S>::make(Mat<S> z0, Mat<S> eps, S t) {
    FlowState st;
    st.zt = blend(z0, eps, t);
    st.z0 = std::move(z0);
    st.eps = std::move(eps);
    st.t = t;
    return st;
}

template <typename S>
Mat<S> blend(const Mat<S>& z0, const Mat<S>& eps, S t) {
    require_same_shape(z0, eps, "blend");
    if (!(t >= S(0) && t <= S(1))) throw std::invalid_argument("blend: t must lie in [0,1]");
    return (S(1) - t) * z0 + t * eps;
}

template <typename S>
Mat<S> velocity_target(const Mat<S>& z0, const Mat<S>& eps) {
    require_same_shape(z0, eps, "velocity_target");
    return eps - z0;
}

template <typename S>
FlowLoss flow_loss(const Mat<S>& pred, const Mat<S>& z0, const Mat<S>& eps, const std::vector<double>& weights,
                   Mat<S>* grad) {
    require_same_shape(pred, z0, "flow_loss");
    require_same_shape(pred, eps, "flow_loss");
    const Eigen::Index frames = pred.rows();
    if (static_cast<Eigen::Index>(weights.size()) != frames - 1)
        throw std::invalid_argument("flow_loss: expected one weight per supervised frame");
    for (double w : weights)
        if (!(w >= 0)) throw std::invalid_argument("flow_loss: weights must be non-negative");

    const double per_frame = static_cast<double>(pred.cols());
    FlowLoss loss;
    loss.frame_mse.resize(frames > 0 ? frames - 1 : 0);
    if (grad) *grad = Mat<S>::Zero(pred.rows(), pred.cols());
    for (Eigen::Index i = 1; i < frames; ++i) {
        const Mat<S> diff = pred.row(i) - (eps.row(i) - z0.row(i));
        const double mse = static_cast<double>(diff.squaredNorm()) / per_frame;
        loss.frame_mse[i - 1] = mse;
        loss.total += weights[i - 1] * mse;
        if (grad) grad->row(i) = static_cast<S>(2.0 * weights[i - 1] / per_frame) * diff;
    }
    return loss;
}

template <typename S>
Mat<S> euler_sample(const VelocityFn<S>& velocity, Mat<S> z, const Mat<S>& conditioning, int steps) {
    if (steps < 1) throw std::invalid_argument("sample: steps must be >= 1");
    const S dt = S(1) / static_cast<S>(steps);
    for (int k = 0; k < steps; ++k) {
        const S t = S(1) - static_cast<S>(k) / static_cast<S>(steps);
        z.row(0) = conditioning.row(0);
        z -= dt * velocity(z, t);
    }
    z.row(0) = conditioning.row(0);
    return z;
}

template <typename S>
Mat<S> gaussian_noise(int rows, int cols, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x6e6f697365ull));
    Mat<S> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(rng.normal());
    return m;
}

template <typename S>
Mat<S> sample(const ModelParams<S>& params, const Mat<S>& guidance, const Mat<S>& conditioning, int frames, int steps,
              std::uint64_t seed, const ForwardOptions& options) {
    if (steps < 1) throw std::invalid_argument("sample: steps must be >= 1");
    const VelocityFn<S> model = [&](const Mat<S>& zt, S t) {
        SampleInput<S> in;
        in.target = zt;
        in.guidance = guidance;
        in.conditioning = conditioning;
        in.t = t;
        return forward(params, in, options);
    };
    return euler_sample(model, gaussian_noise<S>(frames, params.shape.frame_values(), seed), conditioning, steps);
}

Mat<float> to_latent(const Image& frame) {
    Mat<float> m(1, static_cast<Eigen::Index>(frame.rgb.size()));
    for (size_t j = 0; j < frame.rgb.size(); ++j) m(0, static_cast<Eigen::Index>(j)) = 2.0f * frame.rgb[j] - 1.0f;
    return m;
}

Mat<float> to_latents(const std::vector<Image>& frames) {
    if (frames.empty()) return Mat<float>(0, 0);
    Mat<float> m(static_cast<Eigen::Index>(frames.size()), static_cast<Eigen::Index>(frames.front().rgb.size()));
    for (size_t f = 0; f < frames.size(); ++f) {
        if (frames[f].rgb.size() != frames.front().rgb.size()) throw std::invalid_argument("to_latents: frame sizes differ");
        m.row(static_cast<Eigen::Index>(f)) = to_latent(frames[f]);
    }
    return m;
}

std::vector<Image> from_latents(const Mat<float>& latents, int height, int width) {
    if (latents.cols() != static_cast<Eigen::Index>(height) * width * 3)
        throw std::invalid_argument("from_latents: frame size mismatch");
    std::vector<Image> frames;
    for (Eigen::Index f = 0; f < latents.rows(); ++f) {
        Image im(height, width);
        for (Eigen::Index j = 0; j < latents.cols(); ++j) im.rgb[j] = 0.5f * (latents(f, j) + 1.0f);
        frames.push_back(std::move(im));
    }
    return frames;
}

#define CAMGEN_INSTANTIATE(S)                                                                                     \
    template struct FlowState<S>;                                                                                 \
    template Mat<S> blend<S>(const Mat<S>&, const Mat<S>&, S);                                                    \
    template Mat<S> velocity_target<S>(const Mat<S>&, const Mat<S>&);                                             \
    template FlowLoss flow_loss<S>(const Mat<S>&, const Mat<S>&, const Mat<S>&, const std::vector<double>&,       \
                                   Mat<S>*);                                                                      \
    template Mat<S> euler_sample<S>(const VelocityFn<S>&, Mat<S>, const Mat<S>&, int);                            \
    template Mat<S> gaussian_noise<S>(int, int, std::uint64_t);                                                   \
    template Mat<S> sample<S>(const ModelParams<S>&, const Mat<S>&, const Mat<S>&, int, int, std::uint64_t,       \
                              const ForwardOptions&);

CAMGEN_INSTANTIATE(float)
CAMGEN_INSTANTIATE(double)
#undef CAMGEN_INSTANTIATE

} // namespace camgen
