#include "sskd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "sskd/checkpoint.hpp"
#include "sskd/losses.hpp"
#include "sskd/numeric.hpp"

namespace sskd {

namespace {

constexpr int kMaxBadBatches = 3;

std::span<const double> flat_features(const Payload& payload) {
    if (std::holds_alternative<RasterGrid>(payload)) {
        const auto& g = std::get<RasterGrid>(payload);
        return {g.values.data(), g.values.size()};
    }
    const auto& x = std::get<std::vector<double>>(payload);
    return {x.data(), x.size()};
}

void copy_into_row(Matrix& batch, std::size_t row, const Payload& payload) {
    const auto features = flat_features(payload);
    if (features.size() != batch.cols)
        throw InvalidInputError("batch assembly: feature width mismatch");
    std::copy(features.begin(), features.end(), batch.row(row).begin());
}

struct EpochAccumulator {
    std::vector<double> ce, kd, combined;
    double examples = 0.0;

    explicit EpochAccumulator(std::size_t members)
        : ce(members, 0.0), kd(members, 0.0), combined(members, 0.0) {}

    void add(std::size_t k, double ce_v, double kd_v, double total_v, double n) {
        ce[k] += ce_v * n;
        kd[k] += kd_v * n;
        combined[k] += total_v * n;
    }
};

}  // namespace

void TrainConfig::validate() const {
    model.validate();
    if (ensemble_size < 1) throw ConfigError("train config: ensemble size must be >= 1");
    if (lambda < 0.0) throw ConfigError("train config: lambda must be >= 0");
    if (!(temperature > 0.0)) throw ConfigError("train config: temperature must be > 0");
    const double chance = 1.0 / static_cast<double>(model.num_classes);
    if (!(tau > chance && tau <= 1.0))
        throw ConfigError("train config: tau must lie in (1/num_classes, 1]");
    if (!(base_lr > 0.0)) throw ConfigError("train config: base learning rate must be > 0");
    if (epochs_per_iteration < 1) throw ConfigError("train config: epochs must be >= 1");
    if (ssl_iterations < 1) throw ConfigError("train config: iterations must be >= 1");
    if (batch_size < 1) throw ConfigError("train config: batch size must be >= 1");
    validate_policy_pair(weak_policy, strong_policy);
    validate_policy(eval_policy);
    if (eval_policy.kind != AugmentKind::eval)
        throw ConfigError("train config: eval policy must have kind=eval");
}

TrainingState init_training(const TrainConfig& cfg) {
    cfg.validate();
    TrainingState state;
    state.ensemble = init_ensemble(cfg.model, cfg.ensemble_size, cfg.seed);
    for (const ClassifierModel& m : state.ensemble.members)
        state.optimizers.push_back(OptimizerState::for_model(m));
    return state;
}

EpochStats train_epoch(TrainingState& state, const DatasetPools& pools,
                       const TrainConfig& cfg, int iteration, int epoch) {
    if (pools.labeled.empty()) throw ConfigError("train_epoch: labeled pool is empty");
    const std::size_t K = state.ensemble.members.size();
    const std::size_t n = pools.labeled.size();
    const std::size_t dim = cfg.model.flat_input_dim();

    const ClassWeights weights = class_weights(pools.labeled_class_counts());
    const double lr = cosine_lr(cfg.base_lr, epoch, cfg.epochs_per_iteration);

    RngStream root(cfg.seed, RngStream::hash_tag("trainer"));
    RngStream shuffle_rng = root.substream("shuffle", static_cast<std::uint64_t>(iteration),
                                           static_cast<std::uint64_t>(epoch));
    RngStream aug_base = root.substream("augment", static_cast<std::uint64_t>(iteration),
                                        static_cast<std::uint64_t>(epoch));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    shuffle_rng.shuffle(order);

    EpochAccumulator acc(K);
    int consecutive_bad = 0;

    const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        const std::size_t bn = end - start;

        std::vector<int> labels(bn);
        // Shared-draw mode: one augmented view per example, fed to every
        // member. Per-member mode derives a further substream per member.
        std::vector<Matrix> views(cfg.per_member_augmentation ? K : 1,
                                  Matrix(bn, dim));
        for (std::size_t b = 0; b < bn; ++b) {
            const std::size_t pos = start + b;
            const Example& ex = pools.labeled[order[pos]];
            labels[b] = *ex.label;
            RngStream ex_rng = aug_base.substream(pos);
            if (!cfg.per_member_augmentation) {
                const Example aug = strong_augment(ex, cfg.strong_policy, ex_rng);
                copy_into_row(views[0], b, aug.payload);
            } else {
                for (std::size_t k = 0; k < K; ++k) {
                    RngStream member_rng = ex_rng.substream(k);
                    const Example aug = strong_augment(ex, cfg.strong_policy, member_rng);
                    copy_into_row(views[k], b, aug.payload);
                }
            }
        }

        std::vector<Matrix> logits(K);
        std::vector<ForwardCache> caches(K);
        bool finite = true;
        for (std::size_t k = 0; k < K; ++k) {
            const Matrix& x = views[cfg.per_member_augmentation ? k : 0];
            auto [z, cache] = forward(state.ensemble.members[k], x, RunMode::train,
                                      &state.ensemble.member_rngs[k]);
            if (!all_finite(z)) finite = false;
            logits[k] = std::move(z);
            caches[k] = std::move(cache);
        }

        std::vector<LossResult> ce(K), kd(K);
        std::vector<double> totals(K);
        if (finite) {
            SoftTargetBatch targets;
            if (cfg.lambda > 0.0)
                targets = soft_targets(ensemble_logits(logits), cfg.temperature);
            for (std::size_t k = 0; k < K; ++k) {
                ce[k] = weighted_ce(logits[k], labels, weights);
                totals[k] = ce[k].value;
                if (cfg.lambda > 0.0) {
                    kd[k] = kd_loss(logits[k], targets, cfg.temperature);
                    totals[k] += cfg.lambda * kd[k].value;
                }
                if (!std::isfinite(totals[k])) finite = false;
            }
        }

        if (!finite) {
            if (++consecutive_bad >= kMaxBadBatches) {
                std::string where = "iteration " + std::to_string(iteration) + ", epoch " +
                                    std::to_string(epoch) + ", batch at offset " +
                                    std::to_string(start);
                if (!cfg.diagnostics_dir.empty()) {
                    const std::string path = cfg.diagnostics_dir + "/diverged.ckpt";
                    save_checkpoint(state.ensemble, cfg, path,
                                    CheckpointExtras{iteration, epoch, {}});
                    where += "; diagnostic checkpoint at " + path;
                }
                throw DivergenceError("training diverged (" + where + ")");
            }
            continue;
        }
        consecutive_bad = 0;

        for (std::size_t k = 0; k < K; ++k) {
            Matrix dlogits = ce[k].dlogits;
            if (cfg.lambda > 0.0)
                for (std::size_t i = 0; i < dlogits.values.size(); ++i)
                    dlogits.values[i] += cfg.lambda * kd[k].dlogits.values[i];
            const auto grads = backward(state.ensemble.members[k], caches[k], dlogits);
            auto params = state.ensemble.members[k].parameters();
            adam_step(params, grads, state.optimizers[k], lr, cfg.adam);
            acc.add(k, ce[k].value, cfg.lambda > 0.0 ? kd[k].value : 0.0, totals[k],
                    static_cast<double>(bn));
        }
        acc.examples += static_cast<double>(bn);
    }

    EpochStats stats;
    stats.learning_rate = lr;
    stats.ce.resize(K);
    stats.kd.resize(K);
    stats.combined.resize(K);
    const double denom = acc.examples > 0.0 ? acc.examples : 1.0;
    for (std::size_t k = 0; k < K; ++k) {
        stats.ce[k] = acc.ce[k] / denom;
        stats.kd[k] = acc.kd[k] / denom;
        stats.combined[k] = acc.combined[k] / denom;
    }
    return stats;
}

std::vector<PseudoLabelRecord> pseudo_label(const EnsembleState& ensemble,
                                            const std::vector<Example>& unlabeled,
                                            double tau,
                                            const AugmentationPolicy& weak_policy,
                                            RngStream rng, int iteration) {
    std::vector<PseudoLabelRecord> records;
    if (unlabeled.empty()) return records;
    const std::size_t K = ensemble.members.size();
    const std::size_t dim = augmented_dim(unlabeled.front(), weak_policy);

    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < unlabeled.size(); start += kChunk) {
        const std::size_t end = std::min(unlabeled.size(), start + kChunk);
        const std::size_t bn = end - start;
        Matrix batch(bn, dim);
        for (std::size_t b = 0; b < bn; ++b) {
            RngStream ex_rng = rng.substream(start + b);
            const Example aug = weak_augment(unlabeled[start + b], weak_policy, ex_rng);
            copy_into_row(batch, b, aug.payload);
        }
        std::vector<Matrix> logits(K);
        for (std::size_t k = 0; k < K; ++k)
            logits[k] = forward(ensemble.members[k], batch, RunMode::eval, nullptr).first;
        const EnsemblePrediction pred = ensemble_predict(ensemble_logits(logits));
        for (std::size_t b = 0; b < bn; ++b) {
            if (pred.confidence[b] > tau) {
                records.push_back({unlabeled[start + b].id, pred.predicted[b],
                                   pred.confidence[b], iteration});
            }
        }
    }
    return records;
}

DatasetPools expand_dataset(const DatasetPools& pools,
                            std::span<const PseudoLabelRecord> records) {
    std::unordered_map<std::string, const PseudoLabelRecord*> by_id;
    for (const PseudoLabelRecord& r : records) {
        if (!by_id.emplace(r.id, &r).second)
            throw InvalidStateError("expand_dataset: duplicate record for id " + r.id);
    }

    DatasetPools out;
    out.num_classes = pools.num_classes;
    out.labeled = pools.labeled;
    out.labeled_origin = pools.labeled_origin;

    std::size_t matched = 0;
    for (const Example& e : pools.unlabeled) {
        auto it = by_id.find(e.id);
        if (it == by_id.end()) {
            out.unlabeled.push_back(e);
            continue;
        }
        ++matched;
        Example admitted = e;
        admitted.label = it->second->label;
        out.labeled.push_back(std::move(admitted));
        out.labeled_origin.push_back(it->second->iteration);
    }
    if (matched != by_id.size())
        throw InvalidStateError("expand_dataset: record id not present in unlabeled pool");
    return out;
}

namespace {

std::vector<int> batch_predict(const std::vector<const ClassifierModel*>& members,
                               const std::vector<Example>& examples,
                               const AugmentationPolicy& eval_policy) {
    if (examples.empty()) throw InvalidInputError("evaluate: no examples");
    const std::size_t dim = augmented_dim(examples.front(), eval_policy);
    std::vector<int> predictions(examples.size());

    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < examples.size(); start += kChunk) {
        const std::size_t end = std::min(examples.size(), start + kChunk);
        const std::size_t bn = end - start;
        Matrix batch(bn, dim);
        for (std::size_t b = 0; b < bn; ++b) {
            const Example t = eval_transform(examples[start + b], eval_policy);
            copy_into_row(batch, b, t.payload);
        }
        std::vector<Matrix> logits(members.size());
        for (std::size_t k = 0; k < members.size(); ++k)
            logits[k] = forward(*members[k], batch, RunMode::eval, nullptr).first;
        const EnsemblePrediction pred = ensemble_predict(ensemble_logits(logits));
        std::copy(pred.predicted.begin(), pred.predicted.end(),
                  predictions.begin() + static_cast<std::ptrdiff_t>(start));
    }
    return predictions;
}

MetricsReport evaluate_members(const std::vector<const ClassifierModel*>& members,
                               const std::vector<Example>& examples,
                               const AugmentationPolicy& eval_policy) {
    const int num_classes = members.front()->spec.num_classes
                                ? static_cast<int>(members.front()->spec.num_classes)
                                : 0;
    std::vector<int> labels(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (!examples[i].label)
            throw InvalidInputError("evaluate: example " + examples[i].id + " has no label");
        labels[i] = *examples[i].label;
    }
    const auto predictions = batch_predict(members, examples, eval_policy);
    return compute_metrics(confusion_matrix(predictions, labels, num_classes));
}

}  // namespace

MetricsReport evaluate_model(const ClassifierModel& model,
                             const std::vector<Example>& examples,
                             const AugmentationPolicy& eval_policy) {
    return evaluate_members({&model}, examples, eval_policy);
}

MetricsReport evaluate_ensemble(const EnsembleState& ensemble,
                                const std::vector<Example>& examples,
                                const AugmentationPolicy& eval_policy) {
    std::vector<const ClassifierModel*> members;
    for (const ClassifierModel& m : ensemble.members) members.push_back(&m);
    return evaluate_members(members, examples, eval_policy);
}

SslRunOutput run_ssl(const TrainConfig& cfg, DatasetPools pools,
                     const std::vector<Example>& validation) {
    cfg.validate();
    if (pools.labeled.empty()) throw ConfigError("run_ssl: labeled pool is empty");

    TrainingState state = init_training(cfg);
    RngStream root(cfg.seed, RngStream::hash_tag("trainer"));

    SslRunOutput out;
    out.best_val_bacc = -1.0;

    const std::size_t total_examples = pools.labeled.size() + pools.unlabeled.size();
    std::unordered_map<std::string, int> audit;
    for (const Example& e : pools.unlabeled)
        if (e.audit_label) audit.emplace(e.id, *e.audit_label);

    for (int t = 1; t <= cfg.ssl_iterations; ++t) {
        if (cfg.reinit_each_iteration && t > 1) {
            TrainConfig fresh = cfg;
            fresh.seed = root.substream("reinit", static_cast<std::uint64_t>(t)).next_u64();
            state = init_training(fresh);
        }

        IterationRecord record;
        record.iteration = t;
        for (int m = 0; m < cfg.epochs_per_iteration; ++m)
            record.epochs.push_back(train_epoch(state, pools, cfg, t, m));

        const std::size_t labeled_before = pools.labeled.size();
        const auto records = pseudo_label(
            state.ensemble, pools.unlabeled, cfg.tau, cfg.weak_policy,
            root.substream("pseudo", static_cast<std::uint64_t>(t)), t);
        pools = expand_dataset(pools, records);

        if (pools.labeled.size() + pools.unlabeled.size() != total_examples)
            throw InvalidStateError("run_ssl: pool conservation violated");
        if (pools.labeled.size() < labeled_before)
            throw InvalidStateError("run_ssl: labeled pool shrank");

        record.pseudo_admitted = static_cast<std::int64_t>(records.size());
        if (!audit.empty()) {
            std::int64_t correct = 0;
            for (const PseudoLabelRecord& r : records) {
                auto it = audit.find(r.id);
                if (it != audit.end() && it->second == r.label) ++correct;
            }
            record.pseudo_correct = correct;
        }
        record.labeled_after = static_cast<std::int64_t>(pools.labeled.size());
        record.unlabeled_after = static_cast<std::int64_t>(pools.unlabeled.size());

        if (!validation.empty()) {
            record.val_ensemble = evaluate_ensemble(state.ensemble, validation,
                                                    cfg.eval_policy);
            for (const ClassifierModel& member : state.ensemble.members)
                record.val_members.push_back(
                    evaluate_model(member, validation, cfg.eval_policy));
            if (record.val_ensemble.bacc > out.best_val_bacc) {
                out.best_val_bacc = record.val_ensemble.bacc;
                out.best_ensemble = state.ensemble;
                out.best_iteration = t;
            }
        }
        out.history.push_back(std::move(record));
    }

    if (out.best_iteration == 0) {  // no validation data: last state is "best"
        out.best_ensemble = state.ensemble;
        out.best_iteration = cfg.ssl_iterations;
        out.best_val_bacc = 0.0;
    }
    out.final_ensemble = std::move(state.ensemble);
    out.final_pools = std::move(pools);
    return out;
}

nlohmann::json history_to_json(const SslRunOutput& out) {
    nlohmann::json iterations = nlohmann::json::array();
    for (const IterationRecord& rec : out.history) {
        nlohmann::json epochs = nlohmann::json::array();
        for (const EpochStats& e : rec.epochs)
            epochs.push_back({{"lr", e.learning_rate},
                              {"ce", e.ce},
                              {"kd", e.kd},
                              {"combined", e.combined}});
        nlohmann::json members = nlohmann::json::array();
        for (const MetricsReport& m : rec.val_members) members.push_back(m);
        iterations.push_back({{"iteration", rec.iteration},
                              {"epochs", std::move(epochs)},
                              {"val_ensemble", rec.val_ensemble},
                              {"val_members", std::move(members)},
                              {"pseudo_admitted", rec.pseudo_admitted},
                              {"pseudo_correct", rec.pseudo_correct},
                              {"labeled_after", rec.labeled_after},
                              {"unlabeled_after", rec.unlabeled_after}});
    }
    return {{"best_iteration", out.best_iteration},
            {"best_val_bacc", out.best_val_bacc},
            {"iterations", std::move(iterations)}};
}

}  // namespace sskd
