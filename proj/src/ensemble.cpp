#include "sskd/ensemble.hpp"

#include "sskd/errors.hpp"
#include "sskd/numeric.hpp"

namespace sskd {

EnsembleState init_ensemble(const ModelSpec& spec, int ensemble_size,
                            std::uint64_t seed) {
    if (ensemble_size < 1) throw ConfigError("ensemble size must be at least 1");
    EnsembleState state;
    RngStream root(seed, RngStream::hash_tag("ensemble"));
    for (int k = 0; k < ensemble_size; ++k) {
        const auto tag = static_cast<std::uint64_t>(k);
        state.members.push_back(
            init_model(spec, root.substream("init", tag).next_u64()));
        state.member_rngs.push_back(root.substream("dropout", tag));
    }
    return state;
}

Matrix ensemble_logits(std::span<const Matrix> member_logits) {
    if (member_logits.empty())
        throw InvalidInputError("ensemble_logits: no member logits");
    const Matrix& first = member_logits.front();
    Matrix mean(first.rows, first.cols);
    for (const Matrix& z : member_logits) {
        if (!z.same_shape(first))
            throw InvalidInputError("ensemble_logits: member logit shapes differ");
        for (std::size_t i = 0; i < mean.values.size(); ++i)
            mean.values[i] += z.values[i];
    }
    const double inv_k = 1.0 / static_cast<double>(member_logits.size());
    for (double& v : mean.values) v *= inv_k;
    return mean;
}

SoftTargetBatch soft_targets(const Matrix& mean_logits, double temperature) {
    SoftTargetBatch batch;
    batch.probabilities = row_tempered_softmax(mean_logits, temperature);
    batch.temperature = temperature;
    return batch;
}

EnsemblePrediction ensemble_predict(const Matrix& mean_logits) {
    EnsemblePrediction pred;
    pred.probabilities = row_tempered_softmax(mean_logits, 1.0);
    pred.predicted.resize(mean_logits.rows);
    pred.confidence.resize(mean_logits.rows);
    for (std::size_t i = 0; i < mean_logits.rows; ++i) {
        const auto row = pred.probabilities.row(i);
        std::size_t best = 0;
        for (std::size_t j = 1; j < row.size(); ++j)
            if (row[j] > row[best]) best = j;
        pred.predicted[i] = static_cast<int>(best);
        pred.confidence[i] = row[best];
    }
    return pred;
}

}  // namespace sskd
