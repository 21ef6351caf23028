#include "sskd/numeric.hpp"

#include <algorithm>
#include <cmath>

#include "sskd/errors.hpp"

namespace sskd {

namespace {

void check_softmax_args(std::span<const double> logits, double temperature) {
    if (temperature <= 0.0 || !std::isfinite(temperature))
        throw InvalidParameterError("softmax temperature must be positive and finite");
    if (logits.size() < 2)
        throw InvalidInputError("softmax needs at least two classes");
    if (!all_finite(logits))
        throw InvalidInputError("softmax input contains a non-finite logit");
}

}  // namespace

std::vector<double> tempered_softmax(std::span<const double> logits,
                                     double temperature) {
    check_softmax_args(logits, temperature);
    const double hi = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t c = 0; c < logits.size(); ++c) {
        out[c] = std::exp((logits[c] - hi) / temperature);
        total += out[c];
    }
    for (double& v : out) v /= total;
    return out;
}

std::vector<double> log_tempered_softmax(std::span<const double> logits,
                                         double temperature) {
    check_softmax_args(logits, temperature);
    const double hi = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double z : logits) total += std::exp((z - hi) / temperature);
    const double lse = std::log(total);
    std::vector<double> out(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c)
        out[c] = (logits[c] - hi) / temperature - lse;
    return out;
}

Matrix row_tempered_softmax(const Matrix& logits, double temperature) {
    Matrix out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        auto p = tempered_softmax(logits.row(i), temperature);
        std::copy(p.begin(), p.end(), out.row(i).begin());
    }
    return out;
}

Matrix row_log_tempered_softmax(const Matrix& logits, double temperature) {
    Matrix out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        auto lp = log_tempered_softmax(logits.row(i), temperature);
        std::copy(lp.begin(), lp.end(), out.row(i).begin());
    }
    return out;
}

std::vector<double> finite_diff_grad(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double step) {
    if (step <= 0.0 || !std::isfinite(step))
        throw InvalidParameterError("finite_diff_grad: step must be positive");
    std::vector<double> grad(x.size());
    std::vector<double> probe = x;
    for (std::size_t j = 0; j < x.size(); ++j) {
        probe[j] = x[j] + step;
        const double up = f(probe);
        probe[j] = x[j] - step;
        const double down = f(probe);
        probe[j] = x[j];
        grad[j] = (up - down) / (2.0 * step);
    }
    return grad;
}

}  // namespace sskd
