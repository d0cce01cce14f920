#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace wslln {

// Dense row-major matrix of doubles. Small sizes only; clarity over speed.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(size_t i, size_t j) { return a[i * cols + j]; }
    double operator()(size_t i, size_t j) const { return a[i * cols + j]; }

    size_t size() const { return a.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline Matrix matmul(const Matrix& x, const Matrix& w) {
    assert(x.cols == w.rows);
    Matrix y(x.rows, w.cols);
    for (size_t i = 0; i < x.rows; ++i)
        for (size_t k = 0; k < x.cols; ++k) {
            double v = x(i, k);
            if (v == 0.0) continue;
            for (size_t j = 0; j < w.cols; ++j) y(i, j) += v * w(k, j);
        }
    return y;
}

// y = x * w^T, used by backward passes
inline Matrix matmul_nt(const Matrix& x, const Matrix& w) {
    assert(x.cols == w.cols);
    Matrix y(x.rows, w.rows);
    for (size_t i = 0; i < x.rows; ++i)
        for (size_t j = 0; j < w.rows; ++j) {
            double v = 0.0;
            for (size_t k = 0; k < x.cols; ++k) v += x(i, k) * w(j, k);
            y(i, j) = v;
        }
    return y;
}

// y = x^T * w, used by backward passes
inline Matrix matmul_tn(const Matrix& x, const Matrix& w) {
    assert(x.rows == w.rows);
    Matrix y(x.cols, w.cols);
    for (size_t k = 0; k < x.rows; ++k)
        for (size_t i = 0; i < x.cols; ++i) {
            double v = x(k, i);
            if (v == 0.0) continue;
            for (size_t j = 0; j < w.cols; ++j) y(i, j) += v * w(k, j);
        }
    return y;
}

// Order-canonical sum: sorts addends ascending before accumulating, so the
// result is bit-identical under any permutation of the inputs. Used for every
// reduction across proposals; this is what makes vq invariant to proposal
// order at the bit level.
inline double stable_sum(std::vector<double> v) {
    for (double x : v)
        if (std::isnan(x)) return x;  // NaN breaks sort's ordering; propagate it instead
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace wslln
