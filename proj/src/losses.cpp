#include "sskd/losses.hpp"

#include <cmath>

#include "sskd/errors.hpp"
#include "sskd/numeric.hpp"

namespace sskd {

ClassWeights class_weights(std::span<const std::int64_t> counts) {
    if (counts.size() < 2) throw ConfigError("class_weights: need at least two classes");
    double inv_sum = 0.0;
    for (std::int64_t n : counts) {
        if (n < 1) throw ConfigError("class_weights: every class needs at least one sample");
        inv_sum += 1.0 / static_cast<double>(n);
    }
    ClassWeights w;
    w.weights.resize(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c)
        w.weights[c] = (1.0 / static_cast<double>(counts[c])) / inv_sum;
    return w;
}

LossResult weighted_ce(const Matrix& logits, std::span<const int> labels,
                       const ClassWeights& weights) {
    const std::size_t n = logits.rows;
    const std::size_t c = logits.cols;
    if (n == 0) throw InvalidInputError("weighted_ce: empty batch");
    if (labels.size() != n) throw InvalidInputError("weighted_ce: label count mismatch");
    if (weights.weights.size() != c)
        throw InvalidInputError("weighted_ce: weight vector length mismatch");

    LossResult out;
    out.dlogits = Matrix(n, c);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c)
            throw InvalidInputError("weighted_ce: label out of range");
        const double wy = weights.weights[static_cast<std::size_t>(y)];
        const auto logp = log_tempered_softmax(logits.row(i), 1.0);
        total -= wy * logp[static_cast<std::size_t>(y)];
        auto drow = out.dlogits.row(i);
        for (std::size_t j = 0; j < c; ++j) {
            const double p = std::exp(logp[j]);
            drow[j] = wy * (p - (static_cast<std::size_t>(y) == j ? 1.0 : 0.0)) /
                      static_cast<double>(n);
        }
    }
    out.value = total / static_cast<double>(n);
    return out;
}

LossResult kd_loss(const Matrix& student_logits, const SoftTargetBatch& targets,
                   double temperature) {
    if (temperature != targets.temperature)
        throw InvalidStateError("kd_loss: targets were built at a different temperature");
    if (!student_logits.same_shape(targets.probabilities))
        throw InvalidInputError("kd_loss: logit/target shapes differ");
    const std::size_t n = student_logits.rows;
    const std::size_t c = student_logits.cols;
    if (n == 0) throw InvalidInputError("kd_loss: empty batch");

    const double t2 = temperature * temperature;
    LossResult out;
    out.dlogits = Matrix(n, c);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto logp = log_tempered_softmax(student_logits.row(i), temperature);
        const auto target = targets.probabilities.row(i);
        auto drow = out.dlogits.row(i);
        for (std::size_t j = 0; j < c; ++j) {
            total -= target[j] * logp[j];
            drow[j] = temperature * (std::exp(logp[j]) - target[j]) /
                      static_cast<double>(n);
        }
    }
    out.value = t2 * total / static_cast<double>(n);
    return out;
}

LossResult combined_loss(const Matrix& logits, std::span<const int> labels,
                         const ClassWeights& weights, const SoftTargetBatch& targets,
                         double lambda) {
    if (lambda < 0.0) throw InvalidParameterError("combined_loss: lambda must be >= 0");
    LossResult ce = weighted_ce(logits, labels, weights);
    if (lambda == 0.0) return ce;
    const LossResult kd = kd_loss(logits, targets, targets.temperature);
    ce.value += lambda * kd.value;
    for (std::size_t i = 0; i < ce.dlogits.values.size(); ++i)
        ce.dlogits.values[i] += lambda * kd.dlogits.values[i];
    return ce;
}

}  // namespace sskd
