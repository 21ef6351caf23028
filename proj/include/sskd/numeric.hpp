#pragma once

#include <functional>
#include <span>
#include <vector>

#include "sskd/matrix.hpp"

namespace sskd {

/// Softmax of logits / T, max-shifted so large-magnitude logits (or small T)
/// cannot overflow. Output sums to 1 within 1e-12, every entry in (0, 1).
/// Requires at least two classes, finite logits and T > 0.
std::vector<double> tempered_softmax(std::span<const double> logits, double temperature);

/// Log of tempered_softmax computed via log-sum-exp; exp() of the result
/// matches tempered_softmax to 1e-12 and never overflows.
std::vector<double> log_tempered_softmax(std::span<const double> logits,
                                         double temperature);

/// Row-wise tempered softmax of a logit batch.
Matrix row_tempered_softmax(const Matrix& logits, double temperature);

/// Row-wise log tempered softmax of a logit batch.
Matrix row_log_tempered_softmax(const Matrix& logits, double temperature);

/// Central-difference gradient estimate (f(x+h e_j) - f(x-h e_j)) / 2h.
/// Test-suite oracle for analytic gradients. h must be positive.
std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double step);

}  // namespace sskd
