#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sskd/augment.hpp"
#include "sskd/dataset.hpp"
#include "sskd/ensemble.hpp"
#include "sskd/metrics.hpp"
#include "sskd/optimizer.hpp"

namespace sskd {

/// Every knob of the two-stage training loop. Dropout lives in `model`.
struct TrainConfig {
    int ensemble_size = 3;           // K
    double lambda = 10.0;            // distillation weight in the combined loss
    double temperature = 2.0;        // T for soft targets
    double tau = 0.95;               // pseudo-label confidence threshold
    double base_lr = 3e-3;           // eta
    int epochs_per_iteration = 40;   // M
    int ssl_iterations = 3;          // n_iter
    int batch_size = 32;
    AdamHyper adam;
    std::uint64_t seed = 1;
    // One strong draw per example shared by all members is the default; this
    // flag gives every member its own draw instead.
    bool per_member_augmentation = false;
    // Fresh member initialization at the start of every SSL iteration instead
    // of warm-starting from the previous iteration's weights.
    bool reinit_each_iteration = false;
    ModelSpec model;
    AugmentationPolicy weak_policy;
    AugmentationPolicy strong_policy;
    AugmentationPolicy eval_policy;
    std::string diagnostics_dir;  // divergence checkpoints land here ("" = skip)

    void validate() const;
};

/// Ensemble plus the per-member optimizer state that travels with it.
struct TrainingState {
    EnsembleState ensemble;
    std::vector<OptimizerState> optimizers;
};

TrainingState init_training(const TrainConfig& cfg);

struct EpochStats {
    std::vector<double> ce;        // per member, example-weighted epoch means
    std::vector<double> kd;
    std::vector<double> combined;
    double learning_rate = 0.0;
};

/// One pass over the labeled pool: shuffled minibatches, one strong
/// augmentation draw per example shared across members, averaged logits
/// softened into a constant target, then per-member update on
/// weighted CE + lambda * distillation at the cosine-scheduled rate.
/// Class weights are recomputed from the current labeled pool.
///
/// Batches whose loss is non-finite are skipped without an update; three
/// consecutive such batches abort the run with a diagnostic checkpoint.
EpochStats train_epoch(TrainingState& state, const DatasetPools& pools,
                       const TrainConfig& cfg, int iteration, int epoch);

struct PseudoLabelRecord {
    std::string id;
    int label = 0;          // argmax of the ensemble probability row
    double confidence = 0.0;
    int iteration = 0;      // SSL iteration that admitted it
};

/// Confidence-thresholded labeling of the unlabeled pool: one weak
/// augmentation draw per example, members in eval mode, admission where the
/// ensemble's unsoftened max probability strictly exceeds tau. An empty result
/// is valid (tau = 1 admits nothing).
std::vector<PseudoLabelRecord> pseudo_label(const EnsembleState& ensemble,
                                            const std::vector<Example>& unlabeled,
                                            double tau,
                                            const AugmentationPolicy& weak_policy,
                                            RngStream rng, int iteration);

/// Moves admitted examples from the unlabeled to the labeled pool, stamping
/// the pseudo-label and its iteration. Returns a new pools value; the union of
/// examples is conserved.
DatasetPools expand_dataset(const DatasetPools& pools,
                            std::span<const PseudoLabelRecord> records);

/// Test/validation evaluation: eval transform, eval-mode forward, argmax.
MetricsReport evaluate_model(const ClassifierModel& model,
                             const std::vector<Example>& examples,
                             const AugmentationPolicy& eval_policy);
MetricsReport evaluate_ensemble(const EnsembleState& ensemble,
                                const std::vector<Example>& examples,
                                const AugmentationPolicy& eval_policy);

struct IterationRecord {
    int iteration = 0;
    std::vector<EpochStats> epochs;
    MetricsReport val_ensemble;
    std::vector<MetricsReport> val_members;
    std::int64_t pseudo_admitted = 0;
    std::int64_t pseudo_correct = -1;  // via audit labels; -1 = unknown
    std::int64_t labeled_after = 0;
    std::int64_t unlabeled_after = 0;
};

struct SslRunOutput {
    EnsembleState final_ensemble;
    EnsembleState best_ensemble;   // highest validation balanced accuracy
    int best_iteration = 0;
    double best_val_bacc = 0.0;
    std::vector<IterationRecord> history;
    DatasetPools final_pools;
};

/// The full loop: for every SSL iteration, M supervised epochs with
/// distillation, then pseudo-labeling and pool expansion, then validation of
/// the ensemble and every member. Members warm-start across iterations unless
/// configured otherwise. Pool conservation and monotone labeled growth are
/// enforced on every iteration.
SslRunOutput run_ssl(const TrainConfig& cfg, DatasetPools pools,
                     const std::vector<Example>& validation);

/// Deterministic JSON rendering of a run's metric history (used for replay
/// comparisons and run reports).
nlohmann::json history_to_json(const SslRunOutput& out);

}  // namespace sskd
