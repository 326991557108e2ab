#include "sfcorch/linalg.hpp"

#include <cmath>

namespace sfcorch {

Vec matvec(const Mat& m, const Vec& x) {
    check_shape(static_cast<int>(x.size()) == m.cols, "matvec dims");
    Vec y(m.rows, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        double s = 0.0;
        const double* row = &m.a[static_cast<size_t>(r) * m.cols];
        for (int c = 0; c < m.cols; ++c) s += row[c] * x[c];
        y[r] = s;
    }
    return y;
}

Vec matvec_t(const Mat& m, const Vec& x) {
    check_shape(static_cast<int>(x.size()) == m.rows, "matvec_t dims");
    Vec y(m.cols, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = &m.a[static_cast<size_t>(r) * m.cols];
        for (int c = 0; c < m.cols; ++c) y[c] += row[c] * x[r];
    }
    return y;
}

Mat matmul(const Mat& a, const Mat& b) {
    check_shape(a.cols == b.rows, "matmul dims");
    Mat out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            double av = a(i, k);
            if (av == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out(i, j) += av * b(k, j);
        }
    return out;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
    check_shape(a.cols == b.cols, "matmul_nt dims");
    Mat out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += a(i, k) * b(j, k);
            out(i, j) = s;
        }
    return out;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
    check_shape(a.rows == b.rows, "matmul_tn dims");
    Mat out(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k)
        for (int i = 0; i < a.cols; ++i) {
            double av = a(k, i);
            if (av == 0.0) continue;
            for (int j = 0; j < b.cols; ++j) out(i, j) += av * b(k, j);
        }
    return out;
}

void add_outer(Mat& acc, const Vec& u, const Vec& v) {
    check_shape(acc.rows == static_cast<int>(u.size()) && acc.cols == static_cast<int>(v.size()),
                "add_outer dims");
    for (int r = 0; r < acc.rows; ++r)
        for (int c = 0; c < acc.cols; ++c) acc(r, c) += u[r] * v[c];
}

void axpy(double s, const Vec& x, Vec& y) {
    check_shape(x.size() == y.size(), "axpy dims");
    for (size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

double dot(const Vec& a, const Vec& b) {
    check_shape(a.size() == b.size(), "dot dims");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

Vec concat(const Vec& a, const Vec& b) {
    Vec out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool all_finite(const Mat& m) { return all_finite(m.a); }

}  // namespace sfcorch
