#pragma once

#include <span>
#include <vector>

#include "sfcorch/linalg.hpp"
#include "sfcorch/rng.hpp"

namespace sfcorch::nn {

/// Additive-mask sentinel standing in for -infinity. Applied before
/// max-subtraction so masked entries come out exactly 0.
constexpr double kMaskedOut = -1e30;

enum class Activation { Identity, Tanh, Relu };

double apply_act(Activation act, double x);
double act_deriv(Activation act, double pre, double post);

/// Softmax over `scores` with an additive mask of {0, kMaskedOut} entries.
/// Masked entries are exactly 0 in the result; throws if everything is masked.
Vec masked_softmax(const Vec& scores, const Vec* mask = nullptr);

struct DenseLayer {
    Mat W;   // out x in
    Vec b;
    Activation act = Activation::Identity;
};

struct DenseTape {
    Vec input;
    std::vector<Vec> pre;    // pre-activation per layer
    std::vector<Vec> post;   // post-activation per layer
    bool recorded = false;
};

/// Fixed-architecture MLP with hand-rolled backprop. Parameters are exposed
/// as one flat span (layer order: W row-major, then b) so the optimizer,
/// finite-difference checks and checkpoints all share a single layout.
class DenseNet {
public:
    DenseNet() = default;
    DenseNet(const std::vector<int>& dims, const std::vector<Activation>& acts);

    static DenseNet seeded(const std::vector<int>& dims, const std::vector<Activation>& acts,
                           Rng& rng, double scale = 0.0);

    int in_dim() const { return layers.empty() ? 0 : layers.front().W.cols; }
    int out_dim() const { return layers.empty() ? 0 : layers.back().W.rows; }

    size_t n_params() const;
    void write_params(std::span<double> out) const;
    void read_params(std::span<const double> in);

    Vec forward(const Vec& x, DenseTape* tape = nullptr) const;

    /// Accumulates parameter gradients into `grad` (flat layout, same length
    /// as n_params) and returns the gradient w.r.t. the input.
    Vec backward(const DenseTape& tape, const Vec& dout, std::span<double> grad) const;

    std::vector<DenseLayer> layers;
};

struct AttnTape {
    Mat q_in, k_in, v_in;
    Mat q, k, v;                 // projected
    std::vector<Mat> attn;       // per-head attention weights (nq x nk)
    bool recorded = false;
};

/// Multi-head scaled dot-product attention with square d_model projections
/// and an optional residual connection from the query input.
class AttentionBlock {
public:
    AttentionBlock() = default;
    AttentionBlock(int d_model, int num_heads, bool residual);

    static AttentionBlock seeded(int d_model, int num_heads, bool residual, Rng& rng,
                                 double scale = 0.0);

    size_t n_params() const;
    void write_params(std::span<double> out) const;
    void read_params(std::span<const double> in);

    /// mask (optional): nq x nk, nonzero = attend, zero = masked. A fully
    /// masked row raises a degenerate-row error.
    Mat forward(const Mat& q_in, const Mat& k_in, const Mat& v_in, const Mat* mask = nullptr,
                AttnTape* tape = nullptr) const;

    /// Accumulates parameter gradients into `grad`; input gradients are added
    /// into d_q_in / d_k_in / d_v_in when non-null (callers pass the same
    /// matrix for self-attention).
    void backward(const AttnTape& tape, const Mat& dout, std::span<double> grad, Mat* d_q_in,
                  Mat* d_k_in, Mat* d_v_in, const Mat* mask = nullptr) const;

    int d_model = 0;
    int num_heads = 1;
    bool residual = false;
    Mat w_q, w_k, w_v;   // d_model x d_model
};

/// Adaptive-moment optimizer over one flat parameter vector.
class Adam {
public:
    explicit Adam(size_t n, double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    void step(std::span<double> params, std::span<const double> grad);

    double lr;
    long t = 0;   // step counter, non-decreasing

private:
    double beta1_, beta2_, eps_;
    Vec m_, v_;
};

}  // namespace sfcorch::nn
