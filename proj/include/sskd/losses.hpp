#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sskd/matrix.hpp"

namespace sskd {

/// Normalized inverse class frequencies: w_c = (1/n_c) / sum_i (1/n_i).
/// Positive, sums to 1.
struct ClassWeights {
    std::vector<double> weights;
};

ClassWeights class_weights(std::span<const std::int64_t> counts);

/// Temperature-softened target distribution for distillation. Targets are a
/// constant snapshot: no gradient ever flows through them (there is no
/// gradient channel to flow into — losses differentiate only their logits
/// argument).
struct SoftTargetBatch {
    Matrix probabilities;  // [N x C], rows sum to 1
    double temperature = 1.0;
};

struct LossResult {
    double value = 0.0;
    Matrix dlogits;  // gradient of value w.r.t. the logits argument
};

/// Class-weighted cross-entropy over a batch:
///   loss = -(1/N) sum_c w_c sum_i [y_i = c] log p(c | x_i)
/// with p the softmax at temperature 1. Row i of the gradient is
/// (1/N) * w_{y_i} * (p_i - onehot(y_i)).
LossResult weighted_ce(const Matrix& logits, std::span<const int> labels,
                       const ClassWeights& weights);

/// Distillation loss against softened targets:
///   loss = -(T^2/N) sum_i sum_c target_ic log p_s(c | logits_i)
/// where p_s is the softmax of logits / T. Row i of the gradient is
/// (T/N) * (p_s_i - target_i); the T^2 factor keeps gradient magnitude
/// comparable across temperatures. Targets must have been built at the same T.
LossResult kd_loss(const Matrix& student_logits, const SoftTargetBatch& targets,
                   double temperature);

/// total = ce + lambda * kd; gradients add the same way. lambda = 0 returns
/// the cross-entropy result untouched (the distillation term is skipped).
LossResult combined_loss(const Matrix& logits, std::span<const int> labels,
                         const ClassWeights& weights, const SoftTargetBatch& targets,
                         double lambda);

}  // namespace sskd
