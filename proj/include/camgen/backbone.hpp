#pragma once

// Toy video diffusion transformer operating directly on pixel latents.
//
// Token layout for one sample (frame-major, S tokens per frame):
//   rows [0, F*S)      target frames, frame 0 = clean conditioning frame
//   rows [F*S, 2F*S)   geometric context frames (rendered guidance), optional
// Context frame f shares frame index f with target frame f; a segment
// embedding tells the two apart.

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace camgen {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelShape {
    int height = 32;
    int width = 32;
    int channels = 3;
    int patch = 4;
    int dim = 64;
    int heads = 4;
    int blocks = 4;
    int max_frames = 32;
    int ff_mult = 4;

    int grid_rows() const { return height / patch; }
    int grid_cols() const { return width / patch; }
    int tokens_per_frame() const { return grid_rows() * grid_cols(); }
    int patch_values() const { return patch * patch * channels; }
    int frame_values() const { return height * width * channels; }
    int head_dim() const { return dim / heads; }
    int ff_dim() const { return dim * ff_mult; }

    void validate() const;
    bool operator==(const ModelShape&) const = default;
};

enum class Segment : int { target = 0, context = 1 };

enum class ParamGroup {
    base,    // backbone weights
    anchor,  // W'_Q, W'_O of the anchor attention
    fixed,   // never updated by the optimizer (alpha)
};

template <typename S>
struct AnchorAttentionParams {
    Mat<S> wq_prime;  // D x D
    Mat<S> wo_prime;  // D x D
    S alpha = S(1);

    /// W'_Q copied from the host block's W_Q, W'_O zero.
    static AnchorAttentionParams attach(const Mat<S>& host_wq, S alpha);
};

template <typename S>
struct BlockParams {
    Mat<S> norm1;  // 1 x D gain
    Mat<S> wq, wk, wv, wo;
    AnchorAttentionParams<S> anchor;
    Mat<S> norm2;
    Mat<S> ff_w1, ff_b1, ff_w2, ff_b2;
};

template <typename S>
struct ParamView {
    std::string name;
    S* data = nullptr;
    int rows = 0;
    int cols = 0;
    ParamGroup group = ParamGroup::base;

    size_t size() const { return static_cast<size_t>(rows) * cols; }
};

template <typename S>
struct ModelParams {
    ModelShape shape;
    Mat<S> patch_w, patch_b;                   // P x D, 1 x D
    Mat<S> frame_pos, row_pos, col_pos;        // positional tables
    Mat<S> segment_pos;                        // 2 x D
    Mat<S> time_w1, time_b1, time_w2, time_b2; // timestep MLP
    std::vector<BlockParams<S>> blocks;
    Mat<S> final_norm;                         // 1 x D
    Mat<S> unpatch_w, unpatch_b;               // D x P, 1 x P

    static ModelParams init(const ModelShape& shape, std::uint64_t seed, double alpha = 1.0);
    /// Same shapes, every entry zero (alpha included).
    ModelParams zeros_like() const;
    /// Replaces each block's anchor parameters with a fresh attachment.
    void reattach_anchors(double alpha);

    /// Every tensor in a fixed order; alpha appears as a 1x1 "fixed" view.
    std::vector<ParamView<S>> views();
    std::vector<ParamView<const S>> views() const;
    size_t parameter_count() const;

    template <typename T>
    ModelParams<T> cast() const;
};

// ---------------------------------------------------------------------------
// Token-level operations

template <typename S>
struct TokenSequence {
    std::vector<Mat<S>> tokens;        // per batch element: (frames * S) x D
    std::vector<Segment> segment;      // per frame
    std::vector<int> frame_index;      // per frame
    int tokens_per_frame = 0;

    int frames() const { return static_cast<int>(segment.size()); }
    int batch() const { return static_cast<int>(tokens.size()); }
};

/// Latent video (F x H*W*C, pixel layout y, x, channel) -> (F*S) x P patch rows.
template <typename S>
Mat<S> patch_matrix(const Mat<S>& video, const ModelShape& shape);
/// Exact inverse of patch_matrix.
template <typename S>
Mat<S> unpatch_matrix(const Mat<S>& patches, int frames, const ModelShape& shape);

/// Linear patch embedding plus frame/row/col/segment positional encodings.
template <typename S>
TokenSequence<S> patchify(const ModelParams<S>& params, const std::vector<Mat<S>>& latents, Segment segment);

/// Linear read-out of tokens back into latent frames (no normalization).
template <typename S>
std::vector<Mat<S>> unpatchify(const TokenSequence<S>& tokens, const Mat<S>& unpatch_w, const Mat<S>& unpatch_b,
                               const ModelShape& shape);

/// Concatenates guidance frames after the target frames.
template <typename S>
TokenSequence<S> attach_guidance(const TokenSequence<S>& target, const TokenSequence<S>& guidance);

/// Multi-head softmax(Q K^T / sqrt(d)) V with d the per-head width.
template <typename S>
Mat<S> attention(const Mat<S>& q, const Mat<S>& k, const Mat<S>& v, int heads, std::vector<Mat<S>>* probs = nullptr);

/// Anchor attention for target frames 1..F-1 of `features` (rows frame-major,
/// first F*S rows are target frames). Queries use W'_Q, keys and values are
/// frame 0 projected with the block's W_K, W_V. Returns (F-1)*S x D.
template <typename S>
Mat<S> anchor_attention(const Mat<S>& features, int frames, int tokens_per_frame,
                        const AnchorAttentionParams<S>& params, const Mat<S>& wk, const Mat<S>& wv, int heads);

/// self_attn * W_O, plus alpha * anchor * W'_O on target frames 1..F-1.
template <typename S>
Mat<S> combine_outputs(const Mat<S>& self_attn, const Mat<S>& anchor_out, const Mat<S>& wo,
                       const AnchorAttentionParams<S>& params, int tokens_per_frame);

// ---------------------------------------------------------------------------
// Full forward / backward for one sample

struct ForwardOptions {
    bool use_anchor = true;
};

template <typename S>
struct SampleInput {
    Mat<S> target;        // F x frame_values noisy latents
    Mat<S> guidance;      // F x frame_values clean guidance latents; 0 rows = no context
    Mat<S> conditioning;  // 1 x frame_values clean frame 0
    S t = S(0);
};

template <typename S>
struct ForwardCache;

/// Predicted velocity, F x frame_values. Frame 0 of the target is replaced by
/// the conditioning frame before patchification. Pass a cache to enable
/// backward().
template <typename S>
Mat<S> forward(const ModelParams<S>& params, const SampleInput<S>& input, const ForwardOptions& options,
               ForwardCache<S>* cache = nullptr);

/// Batched convenience wrapper; samples never interact.
template <typename S>
std::vector<Mat<S>> forward(const ModelParams<S>& params, const std::vector<SampleInput<S>>& batch,
                            const ForwardOptions& options);

/// Accumulates dL/dparams into `grads` given dL/dvelocity.
template <typename S>
void backward(const ModelParams<S>& params, const ForwardCache<S>& cache, const Mat<S>& d_velocity,
              ModelParams<S>& grads);

/// Sinusoidal features of t (scaled by 1000), length `dim`.
template <typename S>
Mat<S> timestep_features(S t, int dim);

template <typename S>
struct BlockCache {
    Mat<S> x_in, inv_rms1, xhat1, h1, q, k, v, attn;
    std::vector<Mat<S>> probs;
    Mat<S> anchor_q, anchor_attn;
    std::vector<Mat<S>> anchor_probs;
    Mat<S> x_mid, inv_rms2, xhat2, h2, ff_pre, ff_act;
};

template <typename S>
struct ForwardCache {
    int frames = 0;
    int context_frames = 0;
    bool use_anchor = true;
    S t = S(0);
    Mat<S> patches;  // all token rows, (F + context) * S x P
    Mat<S> time_feat_t, time_hidden_t, time_feat_0, time_hidden_0;
    std::vector<BlockCache<S>> blocks;
    Mat<S> x_final, inv_rms_f, xhat_f, h_f;
};

} // namespace camgen
