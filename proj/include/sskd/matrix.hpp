#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "sskd/errors.hpp"

namespace sskd {

/// Dense row-major matrix of doubles. Minimal by intent: just the storage and
/// the handful of products the training code needs.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * cols, cols};
    }

    std::size_t size() const { return values.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double v) { values.assign(values.size(), v); }
};

inline bool all_finite(const Matrix& m) {
    for (double v : m.values)
        if (!std::isfinite(v)) return false;
    return true;
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

/// c = a * b, a is [n x k], b is [k x m].
Matrix matmul(const Matrix& a, const Matrix& b);

/// c = a^T * b, a is [k x n], b is [k x m] -> [n x m].
Matrix matmul_at_b(const Matrix& a, const Matrix& b);

/// c = a * b^T, a is [n x k], b is [m x k] -> [n x m].
Matrix matmul_a_bt(const Matrix& a, const Matrix& b);

/// Adds a [1 x cols] bias row to every row of m.
void add_row_to_each(Matrix& m, const Matrix& bias_row);

/// Column sums of m as a [1 x cols] matrix.
Matrix column_sums(const Matrix& m);

}  // namespace sskd
