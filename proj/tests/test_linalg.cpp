#include <cmath>

#include "doctest.h"
#include "sfcorch/linalg.hpp"

using namespace sfcorch;

TEST_CASE("matvec against hand-computed values") {
    Mat m(2, 3);
    m(0, 0) = 1;
    m(0, 1) = 2;
    m(0, 2) = 3;
    m(1, 0) = -1;
    m(1, 1) = 0.5;
    m(1, 2) = 4;
    Vec x = {1.0, -2.0, 0.5};
    Vec y = matvec(m, x);
    REQUIRE(y.size() == 2);
    CHECK(y[0] == doctest::Approx(1 - 4 + 1.5));
    CHECK(y[1] == doctest::Approx(-1 - 1 + 2));

    Vec z = matvec_t(m, {2.0, -1.0});
    REQUIRE(z.size() == 3);
    CHECK(z[0] == doctest::Approx(2 * 1 + (-1) * (-1)));
    CHECK(z[1] == doctest::Approx(2 * 2 + (-1) * 0.5));
    CHECK(z[2] == doctest::Approx(2 * 3 + (-1) * 4));
}

TEST_CASE("matvec rejects mismatched shapes") {
    Mat m(2, 3);
    CHECK_THROWS_AS(matvec(m, Vec{1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(matvec_t(m, Vec{1.0, 2.0, 3.0}), std::invalid_argument);
    CHECK_THROWS_AS(matmul(Mat(2, 3), Mat(2, 3)), std::invalid_argument);
}

TEST_CASE("matmul variants agree with explicit transposition") {
    Mat a(2, 3), b(3, 2);
    double v = 0.5;
    for (double& x : a.a) x = (v += 0.7);
    for (double& x : b.a) x = (v -= 0.3);

    Mat ab = matmul(a, b);
    REQUIRE(ab.rows == 2);
    REQUIRE(ab.cols == 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
            CHECK(ab(i, j) == doctest::Approx(s));
        }

    // a b^T with b reshaped so shapes line up
    Mat c(2, 3);
    for (size_t i = 0; i < c.a.size(); ++i) c.a[i] = 0.1 * static_cast<double>(i) - 0.2;
    Mat act = matmul_nt(a, c);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += a(i, k) * c(j, k);
            CHECK(act(i, j) == doctest::Approx(s));
        }

    Mat atb = matmul_tn(a, c);
    REQUIRE(atb.rows == 3);
    REQUIRE(atb.cols == 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 2; ++k) s += a(k, i) * c(k, j);
            CHECK(atb(i, j) == doctest::Approx(s));
        }
}

TEST_CASE("outer product accumulation, axpy, dot, norm") {
    Mat acc(2, 2, 1.0);
    add_outer(acc, {2.0, -1.0}, {3.0, 0.5});
    CHECK(acc(0, 0) == doctest::Approx(1 + 6));
    CHECK(acc(0, 1) == doctest::Approx(1 + 1));
    CHECK(acc(1, 0) == doctest::Approx(1 - 3));
    CHECK(acc(1, 1) == doctest::Approx(1 - 0.5));

    Vec y = {1.0, 2.0};
    axpy(0.5, {4.0, -2.0}, y);
    CHECK(y[0] == doctest::Approx(3.0));
    CHECK(y[1] == doctest::Approx(1.0));

    CHECK(dot({1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}) == doctest::Approx(32.0));
    CHECK(norm2({3.0, 4.0}) == doctest::Approx(5.0));
    CHECK(norm2({}) == doctest::Approx(0.0));
}

TEST_CASE("concat and finiteness checks") {
    Vec c = concat({1.0, 2.0}, {3.0});
    CHECK(c == Vec{1.0, 2.0, 3.0});

    CHECK(all_finite(Vec{0.0, -1.5}));
    CHECK_FALSE(all_finite(Vec{0.0, std::nan("")}));
    CHECK_FALSE(all_finite(Vec{std::numeric_limits<double>::infinity()}));
    Mat m(1, 2);
    CHECK(all_finite(m));
    m(0, 1) = std::nan("");
    CHECK_FALSE(all_finite(m));
}
