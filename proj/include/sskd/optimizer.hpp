#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sskd/matrix.hpp"
#include "sskd/model.hpp"

namespace sskd {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second-moment accumulators, one pair per parameter tensor.
struct OptimizerState {
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;
    std::int64_t step = 0;

    static OptimizerState for_model(const ClassifierModel& model);
};

/// Learning rate at epoch m of M: base * cos(7*pi*m / (18*M)). Decays from
/// base at m=0 to about 0.342*base at m=M and stays positive on the whole
/// schedule. m must lie in [0, M].
double cosine_lr(double base_lr, int epoch, int total_epochs);

/// Standard bias-corrected adaptive-moment update, in place. Throws
/// DivergenceError on a non-finite gradient.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
               OptimizerState& state, double lr, const AdamHyper& hyper);

}  // namespace sskd
