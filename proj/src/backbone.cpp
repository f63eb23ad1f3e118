#include "camgen/backbone.hpp"
#include "camgen/random.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace camgen {

void ModelShape::validate() const {
    if (patch <= 0 || height <= 0 || width <= 0 || channels <= 0)
        throw std::invalid_argument("model shape: sizes must be positive");
    if (height % patch != 0 || width % patch != 0)
        throw std::invalid_argument("model shape: image size " + std::to_string(height) + "x" + std::to_string(width) +
                                    " is not divisible by patch " + std::to_string(patch));
    if (dim <= 0 || heads <= 0 || dim % heads != 0)
        throw std::invalid_argument("model shape: dim must be a positive multiple of heads");
    if (blocks < 0 || max_frames < 1 || ff_mult < 1) throw std::invalid_argument("model shape: bad block/frame counts");
}

namespace {

constexpr double kNormEps = 1e-6;

template <typename S>
Mat<S> normal_matrix(int rows, int cols, double stddev, Rng& rng) {
    Mat<S> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(stddev * rng.normal());
    return m;
}

template <typename S>
Mat<S> zeros(int rows, int cols) {
    return Mat<S>::Zero(rows, cols);
}

template <typename S>
Mat<S> ones(int rows, int cols) {
    return Mat<S>::Ones(rows, cols);
}

// Calls f(name, Mat&, group) for every tensor (not alpha).
template <typename P, typename F>
void for_each_tensor(P& p, F&& f) {
    f("patch_w", p.patch_w, ParamGroup::base);
    f("patch_b", p.patch_b, ParamGroup::base);
    f("frame_pos", p.frame_pos, ParamGroup::base);
    f("row_pos", p.row_pos, ParamGroup::base);
    f("col_pos", p.col_pos, ParamGroup::base);
    f("segment_pos", p.segment_pos, ParamGroup::base);
    f("time_w1", p.time_w1, ParamGroup::base);
    f("time_b1", p.time_b1, ParamGroup::base);
    f("time_w2", p.time_w2, ParamGroup::base);
    f("time_b2", p.time_b2, ParamGroup::base);
    for (size_t b = 0; b < p.blocks.size(); ++b) {
        auto& bp = p.blocks[b];
        const std::string pre = "block" + std::to_string(b) + ".";
        f(pre + "norm1", bp.norm1, ParamGroup::base);
        f(pre + "wq", bp.wq, ParamGroup::base);
        f(pre + "wk", bp.wk, ParamGroup::base);
        f(pre + "wv", bp.wv, ParamGroup::base);
        f(pre + "wo", bp.wo, ParamGroup::base);
        f(pre + "anchor_wq", bp.anchor.wq_prime, ParamGroup::anchor);
        f(pre + "anchor_wo", bp.anchor.wo_prime, ParamGroup::anchor);
        f(pre + "norm2", bp.norm2, ParamGroup::base);
        f(pre + "ff_w1", bp.ff_w1, ParamGroup::base);
        f(pre + "ff_b1", bp.ff_b1, ParamGroup::base);
        f(pre + "ff_w2", bp.ff_w2, ParamGroup::base);
        f(pre + "ff_b2", bp.ff_b2, ParamGroup::base);
    }
    f("final_norm", p.final_norm, ParamGroup::base);
    f("unpatch_w", p.unpatch_w, ParamGroup::base);
    f("unpatch_b", p.unpatch_b, ParamGroup::base);
}

template <typename S>
void softmax_rows(Mat<S>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = m.row(r).array();
        const S top = row.maxCoeff();
        row = (row - top).exp();
        row *= S(1) / row.sum();
    }
}

template <typename S>
void rms_norm(const Mat<S>& x, const Mat<S>& gain, Mat<S>& inv, Mat<S>& xhat, Mat<S>& h) {
    inv = (x.array().square().rowwise().mean() + S(kNormEps)).sqrt().inverse().matrix();
    xhat = (x.array().colwise() * inv.col(0).array()).matrix();
    h = (xhat.array().rowwise() * gain.row(0).array()).matrix();
}

// Returns dL/dx; accumulates dL/dgain.
template <typename S>
Mat<S> rms_norm_backward(const Mat<S>& dh, const Mat<S>& xhat, const Mat<S>& inv, const Mat<S>& gain,
                         Mat<S>& dgain) {
    dgain += (dh.array() * xhat.array()).colwise().sum().matrix();
    const Mat<S> dxhat = (dh.array().rowwise() * gain.row(0).array()).matrix();
    const Eigen::Matrix<S, Eigen::Dynamic, 1> proj = (dxhat.array() * xhat.array()).rowwise().mean().matrix();
    Mat<S> dx = dxhat - (xhat.array().colwise() * proj.array()).matrix();
    return (dx.array().colwise() * inv.col(0).array()).matrix();
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

template <typename S>
Mat<S> gelu(const Mat<S>& u) {
    const auto a = u.array();
    const auto inner = S(kGeluC) * (a + S(kGeluA) * a.cube());
    // 0.5 (1 + tanh y) = sigmoid(2y); exp vectorizes in double where tanh does not.
    return (a / (S(1) + (S(-2) * inner).exp())).matrix();
}

template <typename S>
Mat<S> gelu_grad(const Mat<S>& u) {
    const auto a = u.array();
    const Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> th =
        S(2) / (S(1) + (S(-2) * S(kGeluC) * (a + S(kGeluA) * a.cube())).exp()) - S(1);
    return (S(0.5) * (S(1) + th) + S(0.5) * a * (S(1) - th * th) * S(kGeluC) * (S(1) + S(3 * kGeluA) * a.square()))
        .matrix();
}

template <typename S>
Mat<S> silu(const Mat<S>& a) {
    return (a.array() / (S(1) + (-a.array()).exp())).matrix();
}

template <typename S>
Mat<S> silu_grad(const Mat<S>& a) {
    const auto sig = S(1) / (S(1) + (-a.array()).exp());
    return (sig * (S(1) + a.array() * (S(1) - sig))).matrix();
}

template <typename S>
Mat<S> time_mlp(const ModelParams<S>& p, const Mat<S>& feat, Mat<S>& hidden) {
    hidden = feat * p.time_w1 + p.time_b1;
    return silu(hidden) * p.time_w2 + p.time_b2;
}

template <typename S>
void time_mlp_backward(const ModelParams<S>& p, const Mat<S>& feat, const Mat<S>& hidden, const Mat<S>& dout,
                       ModelParams<S>& g) {
    g.time_w2 += silu(hidden).transpose() * dout;
    g.time_b2 += dout;
    const Mat<S> dhidden = ((dout * p.time_w2.transpose()).array() * silu_grad(hidden).array()).matrix();
    g.time_w1 += feat.transpose() * dhidden;
    g.time_b1 += dhidden;
}

struct FrameTag {
    Segment segment;
    int index;
};

template <typename S>
void add_positions(Mat<S>& x, const ModelParams<S>& p, const std::vector<FrameTag>& frames) {
    const int gr = p.shape.grid_rows();
    const int gc = p.shape.grid_cols();
    const int tpf = gr * gc;
    for (size_t f = 0; f < frames.size(); ++f) {
        if (frames[f].index < 0 || frames[f].index >= p.frame_pos.rows())
            throw std::invalid_argument("frame index exceeds the positional table");
        const auto seg_row = p.segment_pos.row(static_cast<int>(frames[f].segment));
        const auto frame_row = p.frame_pos.row(frames[f].index);
        for (int r = 0; r < gr; ++r)
            for (int c = 0; c < gc; ++c)
                x.row(static_cast<Eigen::Index>(f) * tpf + r * gc + c) += frame_row + p.row_pos.row(r) + p.col_pos.row(c) + seg_row;
    }
}

template <typename S>
void add_positions_backward(const Mat<S>& dx, const ModelParams<S>& p, const std::vector<FrameTag>& frames,
                            ModelParams<S>& g) {
    const int gr = p.shape.grid_rows();
    const int gc = p.shape.grid_cols();
    const int tpf = gr * gc;
    for (size_t f = 0; f < frames.size(); ++f) {
        for (int r = 0; r < gr; ++r) {
            for (int c = 0; c < gc; ++c) {
                const auto row = dx.row(static_cast<Eigen::Index>(f) * tpf + r * gc + c);
                g.frame_pos.row(frames[f].index) += row;
                g.row_pos.row(r) += row;
                g.col_pos.row(c) += row;
                g.segment_pos.row(static_cast<int>(frames[f].segment)) += row;
            }
        }
    }
}

std::vector<FrameTag> frame_tags(int frames, int context_frames) {
    std::vector<FrameTag> tags;
    for (int f = 0; f < frames; ++f) tags.push_back({Segment::target, f});
    for (int f = 0; f < context_frames; ++f) tags.push_back({Segment::context, f});
    return tags;
}

// Accumulates gradients of multi-head attention given cached probabilities.
template <typename S>
void attention_backward(const Mat<S>& q, const Mat<S>& k, const Mat<S>& v, const std::vector<Mat<S>>& probs,
                        const Mat<S>& dout, int heads, Mat<S>& dq, Mat<S>& dk, Mat<S>& dv) {
    const int hd = static_cast<int>(q.cols()) / heads;
    const S scale = S(1) / std::sqrt(static_cast<S>(hd));
    for (int h = 0; h < heads; ++h) {
        const Mat<S>& pr = probs[h];
        const Mat<S> doh = dout.middleCols(h * hd, hd);
        Mat<S> tmp(v.rows(), hd);
        tmp.noalias() = pr.transpose() * doh;
        dv.middleCols(h * hd, hd) += tmp;
        Mat<S> dp(pr.rows(), pr.cols());
        dp.noalias() = doh * v.middleCols(h * hd, hd).transpose();
        // softmax Jacobian, row by row: p * (dp - <dp, p>) * scale
        for (Eigen::Index r = 0; r < dp.rows(); ++r) {
            auto dr = dp.row(r).array();
            const auto pr_r = pr.row(r).array();
            const S dot = (dr * pr_r).sum();
            dr = (dr - dot) * pr_r * scale;
        }
        Mat<S> dqh(q.rows(), hd);
        dqh.noalias() = dp * k.middleCols(h * hd, hd);
        dq.middleCols(h * hd, hd) += dqh;
        tmp.noalias() = dp.transpose() * q.middleCols(h * hd, hd);
        dk.middleCols(h * hd, hd) += tmp;
    }
}

template <typename S>
void block_forward(const BlockParams<S>& bp, Mat<S>& x, int frames, int tpf, int heads, bool use_anchor,
                   BlockCache<S>* cache) {
    Mat<S> inv1, xhat1, h1;
    rms_norm(x, bp.norm1, inv1, xhat1, h1);
    Mat<S> q = h1 * bp.wq;
    Mat<S> k = h1 * bp.wk;
    Mat<S> v = h1 * bp.wv;
    std::vector<Mat<S>> probs;
    Mat<S> attn = attention(q, k, v, heads, cache ? &probs : nullptr);

    Mat<S> anchor_q, anchor_attn;
    std::vector<Mat<S>> anchor_probs;
    if (use_anchor && frames >= 2) {
        const int m = (frames - 1) * tpf;
        anchor_q = h1.middleRows(tpf, m) * bp.anchor.wq_prime;
        anchor_attn = attention<S>(anchor_q, k.topRows(tpf), v.topRows(tpf), heads, cache ? &anchor_probs : nullptr);
    }
    Mat<S> x_mid = x + combine_outputs(attn, anchor_attn, bp.wo, bp.anchor, tpf);

    Mat<S> inv2, xhat2, h2;
    rms_norm(x_mid, bp.norm2, inv2, xhat2, h2);
    Mat<S> ff_pre = h2 * bp.ff_w1;
    ff_pre.rowwise() += bp.ff_b1.row(0);
    Mat<S> ff_act = gelu(ff_pre);
    Mat<S> x_out = x_mid + ff_act * bp.ff_w2;
    x_out.rowwise() += bp.ff_b2.row(0);

    if (cache) {
        cache->x_in = std::move(x);
        cache->inv_rms1 = std::move(inv1);
        cache->xhat1 = std::move(xhat1);
        cache->h1 = std::move(h1);
        cache->q = std::move(q);
        cache->k = std::move(k);
        cache->v = std::move(v);
        cache->attn = std::move(attn);
        cache->probs = std::move(probs);
        cache->anchor_q = std::move(anchor_q);
        cache->anchor_attn = std::move(anchor_attn);
        cache->anchor_probs = std::move(anchor_probs);
        cache->x_mid = std::move(x_mid);
        cache->inv_rms2 = std::move(inv2);
        cache->xhat2 = std::move(xhat2);
        cache->h2 = std::move(h2);
        cache->ff_pre = std::move(ff_pre);
        cache->ff_act = std::move(ff_act);
    }
    x = std::move(x_out);
}

// dx: in dL/d(block output), out dL/d(block input).
template <typename S>
void block_backward(const BlockParams<S>& bp, const BlockCache<S>& c, Mat<S>& dx, BlockParams<S>& g, int tpf,
                    int heads) {
    g.ff_w2 += c.ff_act.transpose() * dx;
    g.ff_b2 += dx.colwise().sum();
    const Mat<S> dpre = ((dx * bp.ff_w2.transpose()).array() * gelu_grad(c.ff_pre).array()).matrix();
    g.ff_w1 += c.h2.transpose() * dpre;
    g.ff_b1 += dpre.colwise().sum();
    const Mat<S> dh2 = dpre * bp.ff_w1.transpose();
    const Mat<S> dmid = dx + rms_norm_backward(dh2, c.xhat2, c.inv_rms2, bp.norm2, g.norm2);

    const Eigen::Index n = c.q.rows();
    const Eigen::Index d = c.q.cols();
    g.wo += c.attn.transpose() * dmid;
    const Mat<S> dattn = dmid * bp.wo.transpose();
    Mat<S> dq = zeros<S>(n, d), dk = zeros<S>(n, d), dv = zeros<S>(n, d), dh1 = zeros<S>(n, d);

    if (c.anchor_attn.rows() > 0) {
        const Eigen::Index m = c.anchor_attn.rows();
        const Mat<S> danchor = bp.anchor.alpha * dmid.middleRows(tpf, m);
        g.anchor.wo_prime += c.anchor_attn.transpose() * danchor;
        const Mat<S> daattn = danchor * bp.anchor.wo_prime.transpose();
        Mat<S> daq = zeros<S>(m, d), dk0 = zeros<S>(tpf, d), dv0 = zeros<S>(tpf, d);
        attention_backward<S>(c.anchor_q, c.k.topRows(tpf), c.v.topRows(tpf), c.anchor_probs, daattn, heads, daq, dk0,
                              dv0);
        g.anchor.wq_prime += c.h1.middleRows(tpf, m).transpose() * daq;
        dh1.middleRows(tpf, m) += daq * bp.anchor.wq_prime.transpose();
        dk.topRows(tpf) += dk0;
        dv.topRows(tpf) += dv0;
    }
    attention_backward(c.q, c.k, c.v, c.probs, dattn, heads, dq, dk, dv);
    g.wq += c.h1.transpose() * dq;
    g.wk += c.h1.transpose() * dk;
    g.wv += c.h1.transpose() * dv;
    dh1 += dq * bp.wq.transpose() + dk * bp.wk.transpose() + dv * bp.wv.transpose();
    dx = dmid + rms_norm_backward(dh1, c.xhat1, c.inv_rms1, bp.norm1, g.norm1);
}

} // namespace

// ---------------------------------------------------------------------------

template <typename S>
AnchorAttentionParams<S> AnchorAttentionParams<S>::attach(const Mat<S>& host_wq, S alpha) {
    AnchorAttentionParams a;
    a.wq_prime = host_wq;
    a.wo_prime = Mat<S>::Zero(host_wq.rows(), host_wq.cols());
    a.alpha = alpha;
    return a;
}

template <typename S>
ModelParams<S> ModelParams<S>::init(const ModelShape& shape, std::uint64_t seed, double alpha) {
    shape.validate();
    Rng rng(mix_seed(seed, 0x6d6f64656cull));
    const int d = shape.dim;
    const int p = shape.patch_values();
    const int ff = shape.ff_dim();
    const double depth_scale = 1.0 / std::sqrt(2.0 * std::max(1, shape.blocks));
    ModelParams m;
    m.shape = shape;
    m.patch_w = normal_matrix<S>(p, d, 1.0 / std::sqrt(p), rng);
    m.patch_b = zeros<S>(1, d);
    m.frame_pos = normal_matrix<S>(shape.max_frames, d, 0.1, rng);
    m.row_pos = normal_matrix<S>(shape.grid_rows(), d, 0.1, rng);
    m.col_pos = normal_matrix<S>(shape.grid_cols(), d, 0.1, rng);
    m.segment_pos = normal_matrix<S>(2, d, 0.1, rng);
    m.time_w1 = normal_matrix<S>(d, d, 1.0 / std::sqrt(d), rng);
    m.time_b1 = zeros<S>(1, d);
    m.time_w2 = normal_matrix<S>(d, d, 1.0 / std::sqrt(d), rng);
    m.time_b2 = zeros<S>(1, d);
    for (int b = 0; b < shape.blocks; ++b) {
        BlockParams<S> bp;
        bp.norm1 = ones<S>(1, d);
        bp.wq = normal_matrix<S>(d, d, 1.0 / std::sqrt(d), rng);
        bp.wk = normal_matrix<S>(d, d, 1.0 / std::sqrt(d), rng);
        bp.wv = normal_matrix<S>(d, d, 1.0 / std::sqrt(d), rng);
        bp.wo = normal_matrix<S>(d, d, depth_scale / std::sqrt(d), rng);
        bp.anchor = AnchorAttentionParams<S>::attach(bp.wq, static_cast<S>(alpha));
        bp.norm2 = ones<S>(1, d);
        bp.ff_w1 = normal_matrix<S>(d, ff, 1.0 / std::sqrt(d), rng);
        bp.ff_b1 = zeros<S>(1, ff);
        bp.ff_w2 = normal_matrix<S>(ff, d, depth_scale / std::sqrt(ff), rng);
        bp.ff_b2 = zeros<S>(1, d);
        m.blocks.push_back(std::move(bp));
    }
    m.final_norm = ones<S>(1, d);
    m.unpatch_w = zeros<S>(d, p);
    m.unpatch_b = zeros<S>(1, p);
    return m;
}

template <typename S>
ModelParams<S> ModelParams<S>::zeros_like() const {
    ModelParams z = *this;
    for_each_tensor(z, [](const std::string&, Mat<S>& m, ParamGroup) { m.setZero(); });
    for (auto& b : z.blocks) b.anchor.alpha = S(0);
    return z;
}

template <typename S>
void ModelParams<S>::reattach_anchors(double alpha) {
    for (auto& b : blocks) b.anchor = AnchorAttentionParams<S>::attach(b.wq, static_cast<S>(alpha));
}

template <typename S>
std::vector<ParamView<S>> ModelParams<S>::views() {
    std::vector<ParamView<S>> out;
    for_each_tensor(*this, [&](const std::string& name, Mat<S>& m, ParamGroup g) {
        out.push_back({name, m.data(), static_cast<int>(m.rows()), static_cast<int>(m.cols()), g});
        if (name.ends_with(".anchor_wo")) {
            // alpha sits with its block's anchor parameters
            const int b = std::stoi(name.substr(5, name.find('.') - 5));
            out.push_back({"block" + std::to_string(b) + ".anchor_alpha", &blocks[b].anchor.alpha, 1, 1, ParamGroup::fixed});
        }
    });
    return out;
}

template <typename S>
std::vector<ParamView<const S>> ModelParams<S>::views() const {
    auto mutable_views = const_cast<ModelParams*>(this)->views();
    std::vector<ParamView<const S>> out;
    out.reserve(mutable_views.size());
    for (auto& v : mutable_views) out.push_back({v.name, v.data, v.rows, v.cols, v.group});
    return out;
}

template <typename S>
size_t ModelParams<S>::parameter_count() const {
    size_t n = 0;
    for (const auto& v : views()) n += v.size();
    return n;
}

template <typename S>
template <typename T>
ModelParams<T> ModelParams<S>::cast() const {
    ModelParams<T> out = ModelParams<T>::init(shape, 0, 0.0);
    auto dst = out.views();
    const auto src = views();
    for (size_t i = 0; i < src.size(); ++i)
        for (size_t j = 0; j < src[i].size(); ++j) dst[i].data[j] = static_cast<T>(src[i].data[j]);
    return out;
}

// ---------------------------------------------------------------------------

template <typename S>
Mat<S> patch_matrix(const Mat<S>& video, const ModelShape& shape) {
    if (video.cols() != shape.frame_values()) throw std::invalid_argument("patch_matrix: frame size does not match shape");
    if (shape.height % shape.patch != 0 || shape.width % shape.patch != 0)
        throw std::invalid_argument("patchify: image size not divisible by patch");
    const int frames = static_cast<int>(video.rows());
    const int p = shape.patch;
    const int ch = shape.channels;
    const int gr = shape.grid_rows();
    const int gc = shape.grid_cols();
    Mat<S> out(static_cast<Eigen::Index>(frames) * gr * gc, shape.patch_values());
    for (int f = 0; f < frames; ++f)
        for (int r = 0; r < gr; ++r)
            for (int c = 0; c < gc; ++c) {
                const Eigen::Index row = (static_cast<Eigen::Index>(f) * gr + r) * gc + c;
                int col = 0;
                for (int py = 0; py < p; ++py)
                    for (int px = 0; px < p; ++px) {
                        const Eigen::Index base = (static_cast<Eigen::Index>(r * p + py) * shape.width + c * p + px) * ch;
                        for (int k = 0; k < ch; ++k) out(row, col++) = video(f, base + k);
                    }
            }
    return out;
}

template <typename S>
Mat<S> unpatch_matrix(const Mat<S>& patches, int frames, const ModelShape& shape) {
    const int p = shape.patch;
    const int ch = shape.channels;
    const int gr = shape.grid_rows();
    const int gc = shape.grid_cols();
    if (patches.rows() != static_cast<Eigen::Index>(frames) * gr * gc || patches.cols() != shape.patch_values())
        throw std::invalid_argument("unpatch_matrix: patch matrix shape mismatch");
    Mat<S> out(frames, shape.frame_values());
    for (int f = 0; f < frames; ++f)
        for (int r = 0; r < gr; ++r)
            for (int c = 0; c < gc; ++c) {
                const Eigen::Index row = (static_cast<Eigen::Index>(f) * gr + r) * gc + c;
                int col = 0;
                for (int py = 0; py < p; ++py)
                    for (int px = 0; px < p; ++px) {
                        const Eigen::Index base = (static_cast<Eigen::Index>(r * p + py) * shape.width + c * p + px) * ch;
                        for (int k = 0; k < ch; ++k) out(f, base + k) = patches(row, col++);
                    }
            }
    return out;
}

template <typename S>
TokenSequence<S> patchify(const ModelParams<S>& params, const std::vector<Mat<S>>& latents, Segment segment) {
    params.shape.validate();
    TokenSequence<S> seq;
    seq.tokens_per_frame = params.shape.tokens_per_frame();
    if (latents.empty()) return seq;
    const int frames = static_cast<int>(latents.front().rows());
    std::vector<FrameTag> tags;
    for (int f = 0; f < frames; ++f) {
        tags.push_back({segment, f});
        seq.segment.push_back(segment);
        seq.frame_index.push_back(f);
    }
    for (const auto& z : latents) {
        if (z.rows() != frames) throw std::invalid_argument("patchify: batch elements differ in frame count");
        Mat<S> x = patch_matrix(z, params.shape) * params.patch_w;
        x.rowwise() += params.patch_b.row(0);
        add_positions(x, params, tags);
        seq.tokens.push_back(std::move(x));
    }
    return seq;
}

template <typename S>
std::vector<Mat<S>> unpatchify(const TokenSequence<S>& tokens, const Mat<S>& unpatch_w, const Mat<S>& unpatch_b,
                               const ModelShape& shape) {
    std::vector<Mat<S>> out;
    for (const auto& x : tokens.tokens) {
        Mat<S> patches = x * unpatch_w;
        patches.rowwise() += unpatch_b.row(0);
        out.push_back(unpatch_matrix(patches, tokens.frames(), shape));
    }
    return out;
}

template <typename S>
TokenSequence<S> attach_guidance(const TokenSequence<S>& target, const TokenSequence<S>& guidance) {
    if (target.batch() != guidance.batch()) throw std::invalid_argument("attach_guidance: batch size mismatch");
    if (target.tokens_per_frame != guidance.tokens_per_frame)
        throw std::invalid_argument("attach_guidance: tokens per frame mismatch");
    if (target.frames() != guidance.frames())
        throw std::invalid_argument("attach_guidance: guidance frame count must equal target frame count");
    TokenSequence<S> out;
    out.tokens_per_frame = target.tokens_per_frame;
    out.segment = target.segment;
    out.frame_index = target.frame_index;
    for (int f = 0; f < guidance.frames(); ++f) {
        out.segment.push_back(Segment::context);
        out.frame_index.push_back(target.frame_index[f]);
    }
    for (int b = 0; b < target.batch(); ++b) {
        const auto& a = target.tokens[b];
        const auto& g = guidance.tokens[b];
        if (a.cols() != g.cols()) throw std::invalid_argument("attach_guidance: embedding width mismatch");
        Mat<S> x(a.rows() + g.rows(), a.cols());
        x.topRows(a.rows()) = a;
        x.bottomRows(g.rows()) = g;
        out.tokens.push_back(std::move(x));
    }
    return out;
}

template <typename S>
Mat<S> attention(const Mat<S>& q, const Mat<S>& k, const Mat<S>& v, int heads, std::vector<Mat<S>>* probs) {
    const int d = static_cast<int>(q.cols());
    const int hd = d / heads;
    const S scale = S(1) / std::sqrt(static_cast<S>(hd));
    // Query rows go in blocks so each score tile stays cache resident.
    constexpr Eigen::Index kRowBlock = 64;
    const Eigen::Index n = q.rows();
    Mat<S> out(n, d);
    if (probs) probs->assign(heads, Mat<S>(n, k.rows()));
    Mat<S> scores, oh;
    for (int h = 0; h < heads; ++h) {
        const auto kh = k.middleCols(h * hd, hd);
        const auto vh = v.middleCols(h * hd, hd);
        for (Eigen::Index r0 = 0; r0 < n; r0 += kRowBlock) {
            const Eigen::Index rows = std::min(kRowBlock, n - r0);
            scores.resize(rows, k.rows());
            scores.noalias() = scale * q.block(r0, h * hd, rows, hd) * kh.transpose();
            softmax_rows(scores);
            oh.resize(rows, hd);
            oh.noalias() = scores * vh;
            out.block(r0, h * hd, rows, hd) = oh;
            if (probs) (*probs)[h].middleRows(r0, rows) = scores;
        }
    }
    return out;
}

template <typename S>
Mat<S> anchor_attention(const Mat<S>& features, int frames, int tpf, const AnchorAttentionParams<S>& params,
                        const Mat<S>& wk, const Mat<S>& wv, int heads) {
    if (frames < 2) return Mat<S>(0, features.cols());
    const Mat<S> anchor = features.topRows(tpf);
    const Mat<S> q = features.middleRows(tpf, static_cast<Eigen::Index>(frames - 1) * tpf) * params.wq_prime;
    return attention<S>(q, anchor * wk, anchor * wv, heads);
}

template <typename S>
Mat<S> combine_outputs(const Mat<S>& self_attn, const Mat<S>& anchor_out, const Mat<S>& wo,
                       const AnchorAttentionParams<S>& params, int tpf) {
    Mat<S> out = self_attn * wo;
    if (anchor_out.rows() > 0) out.middleRows(tpf, anchor_out.rows()) += params.alpha * (anchor_out * params.wo_prime);
    return out;
}

template <typename S>
Mat<S> timestep_features(S t, int dim) {
    Mat<S> f = Mat<S>::Zero(1, dim);
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        const double arg = 1000.0 * static_cast<double>(t) * freq;
        f(0, i) = static_cast<S>(std::cos(arg));
        f(0, half + i) = static_cast<S>(std::sin(arg));
    }
    return f;
}

template <typename S>
Mat<S> forward(const ModelParams<S>& params, const SampleInput<S>& input, const ForwardOptions& options,
               ForwardCache<S>* cache) {
    const ModelShape& sh = params.shape;
    if (!(input.t >= S(0) && input.t <= S(1))) throw std::invalid_argument("forward: t must lie in [0,1]");
    const int frames = static_cast<int>(input.target.rows());
    if (frames < 1 || frames > sh.max_frames) throw std::invalid_argument("forward: frame count out of range");
    if (input.target.cols() != sh.frame_values()) throw std::invalid_argument("forward: target frame size mismatch");
    if (input.conditioning.rows() != 1 || input.conditioning.cols() != sh.frame_values())
        throw std::invalid_argument("forward: conditioning must be one frame");
    const int context = static_cast<int>(input.guidance.rows());
    if (context != 0 && (context != frames || input.guidance.cols() != sh.frame_values()))
        throw std::invalid_argument("forward: guidance must match the target frame layout");

    const int tpf = sh.tokens_per_frame();
    const Eigen::Index target_rows = static_cast<Eigen::Index>(frames) * tpf;
    const Eigen::Index context_rows = static_cast<Eigen::Index>(context) * tpf;

    Mat<S> target = input.target;
    target.row(0) = input.conditioning.row(0);
    Mat<S> patches(target_rows + context_rows, sh.patch_values());
    patches.topRows(target_rows) = patch_matrix(target, sh);
    if (context) patches.bottomRows(context_rows) = patch_matrix(input.guidance, sh);

    Mat<S> feat_t = timestep_features(input.t, sh.dim), hidden_t;
    const Mat<S> emb_t = time_mlp(params, feat_t, hidden_t);
    Mat<S> feat_0, hidden_0, emb_0;
    if (context) {
        feat_0 = timestep_features(S(0), sh.dim);
        emb_0 = time_mlp(params, feat_0, hidden_0);
    }

    Mat<S> x = patches * params.patch_w;
    x.rowwise() += params.patch_b.row(0);
    add_positions(x, params, frame_tags(frames, context));
    x.topRows(target_rows).rowwise() += emb_t.row(0);
    if (context) x.bottomRows(context_rows).rowwise() += emb_0.row(0);

    if (cache) {
        cache->frames = frames;
        cache->context_frames = context;
        cache->use_anchor = options.use_anchor;
        cache->t = input.t;
        cache->blocks.assign(params.blocks.size(), BlockCache<S>());
    }
    for (size_t b = 0; b < params.blocks.size(); ++b)
        block_forward(params.blocks[b], x, frames, tpf, sh.heads, options.use_anchor, cache ? &cache->blocks[b] : nullptr);

    Mat<S> xf = x.topRows(target_rows);
    Mat<S> inv_f, xhat_f, h_f;
    rms_norm(xf, params.final_norm, inv_f, xhat_f, h_f);
    Mat<S> out = h_f * params.unpatch_w;
    out.rowwise() += params.unpatch_b.row(0);
    Mat<S> velocity = unpatch_matrix(out, frames, sh);

    if (cache) {
        cache->patches = std::move(patches);
        cache->time_feat_t = std::move(feat_t);
        cache->time_hidden_t = std::move(hidden_t);
        cache->time_feat_0 = std::move(feat_0);
        cache->time_hidden_0 = std::move(hidden_0);
        cache->x_final = std::move(xf);
        cache->inv_rms_f = std::move(inv_f);
        cache->xhat_f = std::move(xhat_f);
        cache->h_f = std::move(h_f);
    }
    return velocity;
}

template <typename S>
std::vector<Mat<S>> forward(const ModelParams<S>& params, const std::vector<SampleInput<S>>& batch,
                            const ForwardOptions& options) {
    std::vector<Mat<S>> out;
    out.reserve(batch.size());
    for (const auto& in : batch) out.push_back(forward(params, in, options));
    return out;
}

template <typename S>
void backward(const ModelParams<S>& params, const ForwardCache<S>& cache, const Mat<S>& d_velocity,
              ModelParams<S>& grads) {
    const ModelShape& sh = params.shape;
    const int tpf = sh.tokens_per_frame();
    const Eigen::Index target_rows = static_cast<Eigen::Index>(cache.frames) * tpf;
    const Eigen::Index context_rows = static_cast<Eigen::Index>(cache.context_frames) * tpf;
    if (d_velocity.rows() != cache.frames || d_velocity.cols() != sh.frame_values())
        throw std::invalid_argument("backward: gradient shape mismatch");

    const Mat<S> dout = patch_matrix(d_velocity, sh);
    grads.unpatch_w += cache.h_f.transpose() * dout;
    grads.unpatch_b += dout.colwise().sum();
    const Mat<S> dhf = dout * params.unpatch_w.transpose();

    Mat<S> dx = Mat<S>::Zero(target_rows + context_rows, sh.dim);
    dx.topRows(target_rows) = rms_norm_backward(dhf, cache.xhat_f, cache.inv_rms_f, params.final_norm, grads.final_norm);

    for (size_t b = params.blocks.size(); b-- > 0;)
        block_backward(params.blocks[b], cache.blocks[b], dx, grads.blocks[b], tpf, sh.heads);

    const Mat<S> demb_t = dx.topRows(target_rows).colwise().sum();
    time_mlp_backward(params, cache.time_feat_t, cache.time_hidden_t, demb_t, grads);
    if (cache.context_frames) {
        const Mat<S> demb_0 = dx.bottomRows(context_rows).colwise().sum();
        time_mlp_backward(params, cache.time_feat_0, cache.time_hidden_0, demb_0, grads);
    }
    add_positions_backward(dx, params, frame_tags(cache.frames, cache.context_frames), grads);
    grads.patch_w += cache.patches.transpose() * dx;
    grads.patch_b += dx.colwise().sum();
}

#define CAMGEN_INSTANTIATE(S)                                                                                        \
    template struct AnchorAttentionParams<S>;                                                                        \
    template struct ModelParams<S>;                                                                                  \
    template Mat<S> patch_matrix<S>(const Mat<S>&, const ModelShape&);                                               \
    template Mat<S> unpatch_matrix<S>(const Mat<S>&, int, const ModelShape&);                                        \
    template TokenSequence<S> patchify<S>(const ModelParams<S>&, const std::vector<Mat<S>>&, Segment);               \
    template std::vector<Mat<S>> unpatchify<S>(const TokenSequence<S>&, const Mat<S>&, const Mat<S>&,                \
                                               const ModelShape&);                                                   \
    template TokenSequence<S> attach_guidance<S>(const TokenSequence<S>&, const TokenSequence<S>&);                  \
    template Mat<S> attention<S>(const Mat<S>&, const Mat<S>&, const Mat<S>&, int, std::vector<Mat<S>>*);            \
    template Mat<S> anchor_attention<S>(const Mat<S>&, int, int, const AnchorAttentionParams<S>&, const Mat<S>&,     \
                                        const Mat<S>&, int);                                                         \
    template Mat<S> combine_outputs<S>(const Mat<S>&, const Mat<S>&, const Mat<S>&, const AnchorAttentionParams<S>&, \
                                       int);                                                                         \
    template Mat<S> timestep_features<S>(S, int);                                                                    \
    template Mat<S> forward<S>(const ModelParams<S>&, const SampleInput<S>&, const ForwardOptions&,                  \
                               ForwardCache<S>*);                                                                    \
    template std::vector<Mat<S>> forward<S>(const ModelParams<S>&, const std::vector<SampleInput<S>>&,               \
                                            const ForwardOptions&);                                                  \
    template void backward<S>(const ModelParams<S>&, const ForwardCache<S>&, const Mat<S>&, ModelParams<S>&);

CAMGEN_INSTANTIATE(float)
CAMGEN_INSTANTIATE(double)
#undef CAMGEN_INSTANTIATE

template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;
template ModelParams<double> ModelParams<double>::cast<double>() const;

} // namespace camgen
