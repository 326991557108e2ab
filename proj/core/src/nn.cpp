#include "sfcorch/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sfcorch::nn {

double apply_act(Activation act, double x) {
    switch (act) {
        case Activation::Identity: return x;
        case Activation::Tanh: return std::tanh(x);
        case Activation::Relu: return x > 0.0 ? x : 0.0;
    }
    return x;
}

double act_deriv(Activation act, double pre, double post) {
    switch (act) {
        case Activation::Identity: return 1.0;
        case Activation::Tanh: return 1.0 - post * post;
        case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
    }
    return 1.0;
}

Vec masked_softmax(const Vec& scores, const Vec* mask) {
    if (mask) check_shape(mask->size() == scores.size(), "masked_softmax mask length");
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (size_t i = 0; i < scores.size(); ++i) {
        bool open = !mask || (*mask)[i] > kMaskedOut / 2;
        if (open) {
            any = true;
            double s = scores[i] + (mask ? (*mask)[i] : 0.0);
            best = std::max(best, s);
        }
    }
    if (!any) throw std::domain_error("masked_softmax: all entries masked");
    Vec out(scores.size(), 0.0);
    double z = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        bool open = !mask || (*mask)[i] > kMaskedOut / 2;
        if (!open) continue;
        double s = scores[i] + (mask ? (*mask)[i] : 0.0);
        out[i] = std::exp(s - best);
        z += out[i];
    }
    for (double& x : out) x /= z;
    return out;
}

// ---------------------------------------------------------------------------
// DenseNet

DenseNet::DenseNet(const std::vector<int>& dims, const std::vector<Activation>& acts) {
    check_shape(dims.size() >= 2, "DenseNet needs at least one layer");
    check_shape(acts.size() == dims.size() - 1, "DenseNet activations per layer");
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        check_shape(dims[i] > 0 && dims[i + 1] > 0, "DenseNet positive dims");
        DenseLayer l;
        l.W = Mat(dims[i + 1], dims[i]);
        l.b = Vec(dims[i + 1], 0.0);
        l.act = acts[i];
        layers.push_back(std::move(l));
    }
}

DenseNet DenseNet::seeded(const std::vector<int>& dims, const std::vector<Activation>& acts,
                          Rng& rng, double scale) {
    DenseNet net(dims, acts);
    for (auto& l : net.layers) {
        double s = scale > 0.0 ? scale : std::sqrt(1.0 / l.W.cols);
        for (double& w : l.W.a) w = rng.gauss(0.0, s);
    }
    return net;
}

size_t DenseNet::n_params() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.W.size() + l.b.size();
    return n;
}

void DenseNet::write_params(std::span<double> out) const {
    check_shape(out.size() == n_params(), "write_params length");
    size_t k = 0;
    for (const auto& l : layers) {
        for (double w : l.W.a) out[k++] = w;
        for (double b : l.b) out[k++] = b;
    }
}

void DenseNet::read_params(std::span<const double> in) {
    check_shape(in.size() == n_params(), "read_params length");
    size_t k = 0;
    for (auto& l : layers) {
        for (double& w : l.W.a) w = in[k++];
        for (double& b : l.b) b = in[k++];
    }
}

Vec DenseNet::forward(const Vec& x, DenseTape* tape) const {
    check_shape(static_cast<int>(x.size()) == in_dim(), "dense_forward input length");
    if (tape) {
        tape->input = x;
        tape->pre.clear();
        tape->post.clear();
        tape->recorded = true;
    }
    Vec h = x;
    for (const auto& l : layers) {
        Vec z = matvec(l.W, h);
        for (size_t i = 0; i < z.size(); ++i) z[i] += l.b[i];
        Vec a(z.size());
        for (size_t i = 0; i < z.size(); ++i) a[i] = apply_act(l.act, z[i]);
        if (tape) {
            tape->pre.push_back(z);
            tape->post.push_back(a);
        }
        h = std::move(a);
    }
    return h;
}

Vec DenseNet::backward(const DenseTape& tape, const Vec& dout, std::span<double> grad) const {
    if (!tape.recorded) throw std::logic_error("DenseNet::backward without a recorded forward");
    check_shape(grad.size() == n_params(), "dense backward grad length");
    check_shape(static_cast<int>(dout.size()) == out_dim(), "dense backward dout length");

    // flat offsets per layer
    std::vector<size_t> offs(layers.size());
    size_t k = 0;
    for (size_t i = 0; i < layers.size(); ++i) {
        offs[i] = k;
        k += layers[i].W.size() + layers[i].b.size();
    }

    Vec da = dout;
    for (int li = static_cast<int>(layers.size()) - 1; li >= 0; --li) {
        const auto& l = layers[li];
        const Vec& in = li == 0 ? tape.input : tape.post[li - 1];
        Vec dz(da.size());
        for (size_t i = 0; i < da.size(); ++i)
            dz[i] = da[i] * act_deriv(l.act, tape.pre[li][i], tape.post[li][i]);
        size_t o = offs[li];
        for (int r = 0; r < l.W.rows; ++r)
            for (int c = 0; c < l.W.cols; ++c)
                grad[o + static_cast<size_t>(r) * l.W.cols + c] += dz[r] * in[c];
        o += l.W.size();
        for (size_t i = 0; i < l.b.size(); ++i) grad[o + i] += dz[i];
        da = matvec_t(l.W, dz);
    }
    return da;
}

// ---------------------------------------------------------------------------
// AttentionBlock

AttentionBlock::AttentionBlock(int d, int heads, bool res)
    : d_model(d), num_heads(heads), residual(res), w_q(d, d), w_k(d, d), w_v(d, d) {
    check_shape(d > 0 && heads > 0, "attention positive dims");
    check_shape(d % heads == 0, "d_model divisible by num_heads");
}

AttentionBlock AttentionBlock::seeded(int d, int heads, bool res, Rng& rng, double scale) {
    AttentionBlock b(d, heads, res);
    double s = scale > 0.0 ? scale : std::sqrt(1.0 / d);
    for (double& w : b.w_q.a) w = rng.gauss(0.0, s);
    for (double& w : b.w_k.a) w = rng.gauss(0.0, s);
    for (double& w : b.w_v.a) w = rng.gauss(0.0, s);
    return b;
}

size_t AttentionBlock::n_params() const { return w_q.size() + w_k.size() + w_v.size(); }

void AttentionBlock::write_params(std::span<double> out) const {
    check_shape(out.size() == n_params(), "attn write_params length");
    size_t k = 0;
    for (double w : w_q.a) out[k++] = w;
    for (double w : w_k.a) out[k++] = w;
    for (double w : w_v.a) out[k++] = w;
}

void AttentionBlock::read_params(std::span<const double> in) {
    check_shape(in.size() == n_params(), "attn read_params length");
    size_t k = 0;
    for (double& w : w_q.a) w = in[k++];
    for (double& w : w_k.a) w = in[k++];
    for (double& w : w_v.a) w = in[k++];
}

Mat AttentionBlock::forward(const Mat& q_in, const Mat& k_in, const Mat& v_in, const Mat* mask,
                            AttnTape* tape) const {
    check_shape(q_in.cols == d_model && k_in.cols == d_model && v_in.cols == d_model,
                "attention d_model");
    check_shape(k_in.rows == v_in.rows, "keys/values row count");
    if (mask) check_shape(mask->rows == q_in.rows && mask->cols == k_in.rows, "mask shape");

    Mat q = matmul(q_in, w_q);
    Mat k = matmul(k_in, w_k);
    Mat v = matmul(v_in, w_v);

    int dh = d_model / num_heads;
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    Mat out(q_in.rows, d_model);
    std::vector<Mat> attn(num_heads);

    for (int h = 0; h < num_heads; ++h) {
        int base = h * dh;
        Mat a(q.rows, k.rows);
        for (int i = 0; i < q.rows; ++i) {
            Vec scores(k.rows);
            Vec m(k.rows, 0.0);
            bool masked = mask != nullptr;
            for (int j = 0; j < k.rows; ++j) {
                double s = 0.0;
                for (int c = 0; c < dh; ++c) s += q(i, base + c) * k(j, base + c);
                scores[j] = s * inv_sqrt;
                if (masked) m[j] = (*mask)(i, j) != 0.0 ? 0.0 : kMaskedOut;
            }
            Vec p;
            try {
                p = masked_softmax(scores, masked ? &m : nullptr);
            } catch (const std::domain_error&) {
                throw std::domain_error("attention: fully masked query row");
            }
            for (int j = 0; j < k.rows; ++j) a(i, j) = p[j];
        }
        for (int i = 0; i < q.rows; ++i)
            for (int j = 0; j < k.rows; ++j) {
                double w = a(i, j);
                if (w == 0.0) continue;
                for (int c = 0; c < dh; ++c) out(i, base + c) += w * v(j, base + c);
            }
        attn[h] = std::move(a);
    }

    if (residual) {
        check_shape(q_in.rows == out.rows, "residual shape");
        for (size_t i = 0; i < out.a.size(); ++i) out.a[i] += q_in.a[i];
    }

    if (tape) {
        tape->q_in = q_in;
        tape->k_in = k_in;
        tape->v_in = v_in;
        tape->q = std::move(q);
        tape->k = std::move(k);
        tape->v = std::move(v);
        tape->attn = std::move(attn);
        tape->recorded = true;
    }
    return out;
}

void AttentionBlock::backward(const AttnTape& tape, const Mat& dout, std::span<double> grad,
                              Mat* d_q_in, Mat* d_k_in, Mat* d_v_in, const Mat* mask) const {
    if (!tape.recorded) throw std::logic_error("AttentionBlock::backward without forward");
    check_shape(grad.size() == n_params(), "attn backward grad length");

    int nq = tape.q.rows, nk = tape.k.rows;
    int dh = d_model / num_heads;
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

    Mat dq(nq, d_model), dk(nk, d_model), dv(nk, d_model);

    for (int h = 0; h < num_heads; ++h) {
        int base = h * dh;
        const Mat& a = tape.attn[h];
        for (int i = 0; i < nq; ++i) {
            // dA and dV for this query row
            Vec dA(nk, 0.0);
            for (int j = 0; j < nk; ++j) {
                double w = a(i, j);
                double s = 0.0;
                for (int c = 0; c < dh; ++c) {
                    s += dout(i, base + c) * tape.v(j, base + c);
                    dv(j, base + c) += w * dout(i, base + c);
                }
                dA[j] = s;
            }
            // softmax backward: dS = A * (dA - sum(dA * A))
            double inner = 0.0;
            for (int j = 0; j < nk; ++j) inner += dA[j] * a(i, j);
            for (int j = 0; j < nk; ++j) {
                double dS = a(i, j) * (dA[j] - inner);
                if (dS == 0.0) continue;
                for (int c = 0; c < dh; ++c) {
                    dq(i, base + c) += dS * tape.k(j, base + c) * inv_sqrt;
                    dk(j, base + c) += dS * tape.q(i, base + c) * inv_sqrt;
                }
            }
        }
    }
    (void)mask;  // masked entries already have zero attention weight

    // projection params: Q = q_in Wq etc.
    Mat dWq = matmul_tn(tape.q_in, dq);
    Mat dWk = matmul_tn(tape.k_in, dk);
    Mat dWv = matmul_tn(tape.v_in, dv);
    size_t k = 0;
    for (double g : dWq.a) grad[k++] += g;
    for (double g : dWk.a) grad[k++] += g;
    for (double g : dWv.a) grad[k++] += g;

    if (d_q_in) {
        Mat d1 = matmul_nt(dq, w_q);
        for (size_t i = 0; i < d1.a.size(); ++i) d_q_in->a[i] += d1.a[i];
        if (residual)
            for (size_t i = 0; i < dout.a.size(); ++i) d_q_in->a[i] += dout.a[i];
    }
    if (d_k_in) {
        Mat d1 = matmul_nt(dk, w_k);
        for (size_t i = 0; i < d1.a.size(); ++i) d_k_in->a[i] += d1.a[i];
    }
    if (d_v_in) {
        Mat d1 = matmul_nt(dv, w_v);
        for (size_t i = 0; i < d1.a.size(); ++i) d_v_in->a[i] += d1.a[i];
    }
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(size_t n, double lr_, double beta1, double beta2, double eps)
    : lr(lr_), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {
    if (lr_ <= 0.0) throw std::invalid_argument("Adam: learning rate must be positive");
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
    check_shape(params.size() == m_.size() && grad.size() == m_.size(), "Adam step sizes");
    ++t;
    double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t));
    double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t));
    for (size_t i = 0; i < m_.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
        params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

}  // namespace sfcorch::nn
