#include "sskd/optimizer.hpp"

#include <cmath>

#include "sskd/errors.hpp"

namespace sskd {

OptimizerState OptimizerState::for_model(const ClassifierModel& model) {
    OptimizerState state;
    for (const Matrix* p : model.parameters()) {
        state.first_moment.emplace_back(p->rows, p->cols);
        state.second_moment.emplace_back(p->rows, p->cols);
    }
    return state;
}

double cosine_lr(double base_lr, int epoch, int total_epochs) {
    if (total_epochs < 1) throw InvalidParameterError("cosine_lr: total epochs must be >= 1");
    if (epoch < 0 || epoch > total_epochs)
        throw InvalidParameterError("cosine_lr: epoch outside [0, total]");
    constexpr double kPi = 3.141592653589793238462643383279502884;
    return base_lr * std::cos(7.0 * kPi * static_cast<double>(epoch) /
                              (18.0 * static_cast<double>(total_epochs)));
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
               OptimizerState& state, double lr, const AdamHyper& hyper) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw InvalidInputError("adam_step: parameter/gradient/state count mismatch");
    ++state.step;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    for (std::size_t t = 0; t < params.size(); ++t) {
        Matrix& p = *params[t];
        const Matrix& g = grads[t];
        Matrix& m = state.first_moment[t];
        Matrix& v = state.second_moment[t];
        if (!p.same_shape(g) || !p.same_shape(m))
            throw InvalidInputError("adam_step: tensor shape mismatch");
        for (std::size_t i = 0; i < p.values.size(); ++i) {
            const double gi = g.values[i];
            if (!std::isfinite(gi))
                throw DivergenceError("adam_step: non-finite gradient in tensor " +
                                      std::to_string(t));
            m.values[i] = hyper.beta1 * m.values[i] + (1.0 - hyper.beta1) * gi;
            v.values[i] = hyper.beta2 * v.values[i] + (1.0 - hyper.beta2) * gi * gi;
            const double m_hat = m.values[i] / bc1;
            const double v_hat = v.values[i] / bc2;
            p.values[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
        }
    }
}

}  // namespace sskd
