#pragma once

#include <span>
#include <vector>

#include "sskd/losses.hpp"
#include "sskd/matrix.hpp"
#include "sskd/model.hpp"
#include "sskd/rng.hpp"

namespace sskd {

/// K member classifiers plus the per-member randomness they own. Members are
/// independently initialized; their dropout streams evolve with training.
struct EnsembleState {
    std::vector<ClassifierModel> members;
    std::vector<RngStream> member_rngs;

    int size() const { return static_cast<int>(members.size()); }
};

/// Members get init substream ("init", k) and dropout substream ("dropout", k)
/// of the given seed, so any K prefix of a larger ensemble is reproducible.
EnsembleState init_ensemble(const ModelSpec& spec, int ensemble_size, std::uint64_t seed);

/// Elementwise mean of the member logit batches.
Matrix ensemble_logits(std::span<const Matrix> member_logits);

/// Row-wise softened distribution of the mean logits; the returned batch is a
/// constant snapshot (stop-gradient) for the distillation loss.
SoftTargetBatch soft_targets(const Matrix& mean_logits, double temperature);

struct EnsemblePrediction {
    Matrix probabilities;            // softmax at temperature 1
    std::vector<int> predicted;      // argmax, lowest index wins ties
    std::vector<double> confidence;  // max probability per row
};

EnsemblePrediction ensemble_predict(const Matrix& mean_logits);

}  // namespace sskd
