#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "sskd/errors.hpp"

namespace sskd {

/// C x C count grid; entry (true class r, predicted class c).
struct ConfusionMatrix {
    std::size_t num_classes = 0;
    std::vector<std::int64_t> counts;  // row-major [true][pred]

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t c) : num_classes(c), counts(c * c, 0) {}

    std::int64_t& at(std::size_t r, std::size_t c) { return counts[r * num_classes + c]; }
    std::int64_t at(std::size_t r, std::size_t c) const {
        return counts[r * num_classes + c];
    }

    std::int64_t total() const;
    std::int64_t support(std::size_t r) const;  // row sum = true count of class r
};

/// The four headline scores plus their per-class components.
///
/// bacc      = mean per-class recall
/// acc       = trace / total
/// acc_star  = mean per-class one-vs-rest binary accuracy
/// macro_f1  = mean per-class F1
///
/// A class with an undefined term (no true examples, or 0/0 in F1) contributes
/// 0; stratified splits keep classes populated, so this only guards
/// pathological inputs.
struct MetricsReport {
    double bacc = 0.0;
    double acc = 0.0;
    double acc_star = 0.0;
    double macro_f1 = 0.0;
    std::vector<double> per_class_recall;
    std::vector<double> per_class_f1;
    std::vector<double> per_class_binary_acc;
    std::vector<std::int64_t> support;
    ConfusionMatrix confusion;
};

/// Tally predictions against labels. Both live in [0, num_classes).
ConfusionMatrix confusion_matrix(std::span<const int> predictions,
                                 std::span<const int> labels, int num_classes);

MetricsReport compute_metrics(const ConfusionMatrix& cm);

/// Stable JSON schema: keys bacc, acc, acc_star, macro_f1, per_class_recall,
/// per_class_f1, per_class_binary_acc, support, confusion (row-major C x C).
void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);

}  // namespace sskd
