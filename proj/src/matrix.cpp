#include "sskd/matrix.hpp"

namespace sskd {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw InvalidInputError(what);
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols == b.rows, "matmul: inner dimensions disagree");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.values.data() + i * a.cols;
        double* crow = c.values.data() + i * c.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.values.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    require(a.rows == b.rows, "matmul_at_b: row counts disagree");
    Matrix c(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.values.data() + k * a.cols;
        const double* brow = b.values.data() + k * b.cols;
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            double* crow = c.values.data() + i * c.cols;
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    require(a.cols == b.cols, "matmul_a_bt: column counts disagree");
    Matrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.values.data() + i * a.cols;
        double* crow = c.values.data() + i * c.cols;
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.values.data() + j * b.cols;
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
    return c;
}

void add_row_to_each(Matrix& m, const Matrix& bias_row) {
    require(bias_row.rows == 1 && bias_row.cols == m.cols,
            "add_row_to_each: bias must be [1 x cols]");
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* row = m.values.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) row[j] += bias_row.values[j];
    }
}

Matrix column_sums(const Matrix& m) {
    Matrix out(1, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.values.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) out.values[j] += row[j];
    }
    return out;
}

}  // namespace sskd
