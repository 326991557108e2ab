#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sfcorch {

using Vec = std::vector<double>;

/// Dense row-major matrix.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return a.size(); }
};

Vec matvec(const Mat& m, const Vec& x);
Vec matvec_t(const Mat& m, const Vec& x);          // m^T x
Mat matmul(const Mat& a, const Mat& b);
Mat matmul_nt(const Mat& a, const Mat& b);         // a b^T
Mat matmul_tn(const Mat& a, const Mat& b);         // a^T b
void add_outer(Mat& acc, const Vec& u, const Vec& v);  // acc += u v^T
void axpy(double s, const Vec& x, Vec& y);
double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);
Vec concat(const Vec& a, const Vec& b);

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

inline void check_shape(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("shape error: ") + what);
}

}  // namespace sfcorch
