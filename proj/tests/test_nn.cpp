#include <cmath>

#include "doctest.h"
#include "sfcorch/nn.hpp"

using namespace sfcorch;
using namespace sfcorch::nn;

namespace {

// independent softmax for cross-checking
Vec naive_softmax(const Vec& s) {
    double mx = s[0];
    for (double x : s) mx = std::max(mx, x);
    Vec e(s.size());
    double z = 0;
    for (size_t i = 0; i < s.size(); ++i) z += e[i] = std::exp(s[i] - mx);
    for (double& x : e) x /= z;
    return e;
}

}  // namespace

TEST_CASE("masked softmax: masked entries exactly zero, rest renormalized") {
    Vec scores = {1.0, 2.0, 3.0, -1.0};
    Vec out = masked_softmax(scores);
    Vec ref = naive_softmax(scores);
    double sum = 0;
    for (size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-12));
        sum += out[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    Vec mask = {0.0, kMaskedOut, 0.0, kMaskedOut};
    Vec m = masked_softmax(scores, &mask);
    CHECK(m[1] == 0.0);
    CHECK(m[3] == 0.0);
    Vec ref2 = naive_softmax({1.0, 3.0});
    CHECK(m[0] == doctest::Approx(ref2[0]).epsilon(1e-12));
    CHECK(m[2] == doctest::Approx(ref2[1]).epsilon(1e-12));

    Vec all = {kMaskedOut, kMaskedOut, kMaskedOut, kMaskedOut};
    CHECK_THROWS(masked_softmax(scores, &all));
}

TEST_CASE("masked softmax is stable under large score offsets") {
    Vec scores = {1000.0, 1001.0, 999.0};
    Vec out = masked_softmax(scores);
    Vec ref = naive_softmax({0.0, 1.0, -1.0});
    for (size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("dense net forward matches a by-hand two-layer computation") {
    DenseNet net({2, 2, 1}, {Activation::Tanh, Activation::Identity});
    // W1 = [[1, -1], [0.5, 2]], b1 = [0.1, -0.2]; W2 = [[2, -3]], b2 = [0.5]
    Vec p = {1, -1, 0.5, 2, 0.1, -0.2, 2, -3, 0.5};
    REQUIRE(net.n_params() == p.size());
    net.read_params(p);
    Vec x = {0.3, -0.7};
    double h0 = std::tanh(1 * 0.3 + (-1) * (-0.7) + 0.1);
    double h1 = std::tanh(0.5 * 0.3 + 2 * (-0.7) - 0.2);
    double y = 2 * h0 - 3 * h1 + 0.5;
    Vec out = net.forward(x);
    REQUIRE(out.size() == 1);
    CHECK(out[0] == doctest::Approx(y).epsilon(1e-12));

    Vec back(p.size());
    net.write_params(back);
    CHECK(back == p);
}

TEST_CASE("dense net gradients match central finite differences") {
    Rng rng(3);
    DenseNet net = DenseNet::seeded({3, 5, 4, 2}, {Activation::Tanh, Activation::Relu,
                                                   Activation::Identity}, rng);
    Vec x = {0.4, -0.6, 0.9};
    Vec dout = {1.0, -0.5};

    DenseTape tape;
    net.forward(x, &tape);
    Vec grad(net.n_params(), 0.0);
    Vec dx = net.backward(tape, dout, grad);

    auto scalar = [&](DenseNet& n, const Vec& in) {
        Vec o = n.forward(in);
        return dot(o, dout);
    };

    Vec params(net.n_params());
    net.write_params(params);
    double h = 1e-6;
    for (size_t i = 0; i < params.size(); i += 3) {
        Vec p = params;
        p[i] += h;
        net.read_params(p);
        double up = scalar(net, x);
        p[i] -= 2 * h;
        net.read_params(p);
        double dn = scalar(net, x);
        net.read_params(params);
        double fd = (up - dn) / (2 * h);
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5).scale(std::max(1.0, std::abs(fd))));
    }
    for (size_t i = 0; i < x.size(); ++i) {
        Vec xx = x;
        xx[i] += h;
        double up = scalar(net, xx);
        xx[i] -= 2 * h;
        double dn = scalar(net, xx);
        double fd = (up - dn) / (2 * h);
        CHECK(dx[i] == doctest::Approx(fd).epsilon(1e-5).scale(std::max(1.0, std::abs(fd))));
    }
}

TEST_CASE("attention block gradients match central finite differences") {
    Rng rng(9);
    AttentionBlock attn = AttentionBlock::seeded(4, 2, true, rng);
    Mat q(2, 4), kv(3, 4);
    for (size_t i = 0; i < q.a.size(); ++i) q.a[i] = 0.1 * static_cast<double>(i) - 0.3;
    for (size_t i = 0; i < kv.a.size(); ++i) kv.a[i] = 0.07 * static_cast<double>(i) - 0.4;
    Mat dout(2, 4);
    for (size_t i = 0; i < dout.a.size(); ++i) dout.a[i] = (i % 2 ? -1.0 : 1.0) * 0.5;

    AttnTape tape;
    attn.forward(q, kv, kv, nullptr, &tape);
    Vec grad(attn.n_params(), 0.0);
    Mat dq(2, 4), dkv(3, 4);
    attn.backward(tape, dout, grad, &dq, &dkv, &dkv);

    auto scalar = [&] {
        Mat o = attn.forward(q, kv, kv);
        double s = 0;
        for (size_t i = 0; i < o.a.size(); ++i) s += o.a[i] * dout.a[i];
        return s;
    };

    Vec params(attn.n_params());
    attn.write_params(params);
    double h = 1e-6;
    for (size_t i = 0; i < params.size(); i += 5) {
        Vec p = params;
        p[i] += h;
        attn.read_params(p);
        double up = scalar();
        p[i] -= 2 * h;
        attn.read_params(p);
        double dn = scalar();
        attn.read_params(params);
        double fd = (up - dn) / (2 * h);
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5).scale(std::max(1.0, std::abs(fd))));
    }

    // input gradients, q side
    for (size_t i = 0; i < q.a.size(); i += 2) {
        double keep = q.a[i];
        q.a[i] = keep + h;
        double up = scalar();
        q.a[i] = keep - h;
        double dn = scalar();
        q.a[i] = keep;
        double fd = (up - dn) / (2 * h);
        CHECK(dq.a[i] == doctest::Approx(fd).epsilon(1e-5).scale(std::max(1.0, std::abs(fd))));
    }
    // k/v side shares one input matrix
    for (size_t i = 0; i < kv.a.size(); i += 3) {
        double keep = kv.a[i];
        kv.a[i] = keep + h;
        double up = scalar();
        kv.a[i] = keep - h;
        double dn = scalar();
        kv.a[i] = keep;
        double fd = (up - dn) / (2 * h);
        CHECK(dkv.a[i] == doctest::Approx(fd).epsilon(1e-5).scale(std::max(1.0, std::abs(fd))));
    }
}

TEST_CASE("attention mask zeroes contributions and rejects fully masked rows") {
    Rng rng(21);
    AttentionBlock attn = AttentionBlock::seeded(4, 2, false, rng);
    Mat q(1, 4), kv(3, 4);
    for (size_t i = 0; i < q.a.size(); ++i) q.a[i] = 0.2;
    for (size_t i = 0; i < kv.a.size(); ++i) kv.a[i] = 0.05 * static_cast<double>(i);

    Mat mask(1, 3, 1.0);
    mask(0, 2) = 0.0;
    // masking row 2 must equal attention over only rows 0..1
    Mat kv2(2, 4);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 4; ++c) kv2(r, c) = kv(r, c);
    Mat a = attn.forward(q, kv, kv, &mask);
    Mat b = attn.forward(q, kv2, kv2);
    for (size_t i = 0; i < a.a.size(); ++i) CHECK(a.a[i] == doctest::Approx(b.a[i]).epsilon(1e-12));

    Mat none(1, 3, 0.0);
    CHECK_THROWS(attn.forward(q, kv, kv, &none));
}

TEST_CASE("adam reduces a quadratic objective") {
    Adam opt(2, 0.05);
    Vec x = {3.0, -2.0};
    for (int it = 0; it < 400; ++it) {
        Vec g = {2 * (x[0] - 1.0), 2 * (x[1] + 0.5)};
        opt.step(x, g);
    }
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(x[1] == doctest::Approx(-0.5).epsilon(1e-2));
    CHECK(opt.t == 400);
}
