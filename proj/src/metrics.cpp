#include "sskd/metrics.hpp"

#include <numeric>

namespace sskd {

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::support(std::size_t r) const {
    std::int64_t n = 0;
    for (std::size_t c = 0; c < num_classes; ++c) n += at(r, c);
    return n;
}

ConfusionMatrix confusion_matrix(std::span<const int> predictions,
                                 std::span<const int> labels, int num_classes) {
    if (num_classes < 2)
        throw InvalidInputError("confusion_matrix: need at least two classes");
    if (predictions.size() != labels.size())
        throw InvalidInputError("confusion_matrix: prediction/label lengths differ");
    ConfusionMatrix cm(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int t = labels[i];
        const int p = predictions[i];
        if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
            throw InvalidInputError("confusion_matrix: class index out of range");
        ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }
    return cm;
}

MetricsReport compute_metrics(const ConfusionMatrix& cm) {
    const std::size_t C = cm.num_classes;
    if (C < 2) throw InvalidInputError("compute_metrics: need at least two classes");
    const std::int64_t total = cm.total();
    if (total < 1) throw InvalidInputError("compute_metrics: empty confusion matrix");

    MetricsReport r;
    r.confusion = cm;
    r.per_class_recall.resize(C);
    r.per_class_f1.resize(C);
    r.per_class_binary_acc.resize(C);
    r.support.resize(C);

    std::int64_t trace = 0;
    double recall_sum = 0.0, f1_sum = 0.0, bin_sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        const std::int64_t tp = cm.at(c, c);
        const std::int64_t sup = cm.support(c);
        const std::int64_t fn = sup - tp;
        std::int64_t fp = 0;
        for (std::size_t rr = 0; rr < C; ++rr)
            if (rr != c) fp += cm.at(rr, c);
        const std::int64_t tn = total - tp - fn - fp;

        trace += tp;
        r.support[c] = sup;
        r.per_class_recall[c] = sup > 0 ? static_cast<double>(tp) / static_cast<double>(sup) : 0.0;
        const std::int64_t f1_den = 2 * tp + fp + fn;
        r.per_class_f1[c] =
            f1_den > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(f1_den) : 0.0;
        r.per_class_binary_acc[c] =
            static_cast<double>(tp + tn) / static_cast<double>(total);

        recall_sum += r.per_class_recall[c];
        f1_sum += r.per_class_f1[c];
        bin_sum += r.per_class_binary_acc[c];
    }

    r.bacc = recall_sum / static_cast<double>(C);
    r.macro_f1 = f1_sum / static_cast<double>(C);
    r.acc_star = bin_sum / static_cast<double>(C);
    r.acc = static_cast<double>(trace) / static_cast<double>(total);
    return r;
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
    std::vector<std::vector<std::int64_t>> grid(r.confusion.num_classes);
    for (std::size_t row = 0; row < r.confusion.num_classes; ++row)
        grid[row].assign(r.confusion.counts.begin() +
                             static_cast<std::ptrdiff_t>(row * r.confusion.num_classes),
                         r.confusion.counts.begin() +
                             static_cast<std::ptrdiff_t>((row + 1) * r.confusion.num_classes));
    j = nlohmann::json{{"bacc", r.bacc},
                       {"acc", r.acc},
                       {"acc_star", r.acc_star},
                       {"macro_f1", r.macro_f1},
                       {"per_class_recall", r.per_class_recall},
                       {"per_class_f1", r.per_class_f1},
                       {"per_class_binary_acc", r.per_class_binary_acc},
                       {"support", r.support},
                       {"confusion", grid}};
}

void from_json(const nlohmann::json& j, MetricsReport& r) {
    j.at("bacc").get_to(r.bacc);
    j.at("acc").get_to(r.acc);
    j.at("acc_star").get_to(r.acc_star);
    j.at("macro_f1").get_to(r.macro_f1);
    j.at("per_class_recall").get_to(r.per_class_recall);
    j.at("per_class_f1").get_to(r.per_class_f1);
    j.at("per_class_binary_acc").get_to(r.per_class_binary_acc);
    j.at("support").get_to(r.support);
    auto grid = j.at("confusion").get<std::vector<std::vector<std::int64_t>>>();
    r.confusion = ConfusionMatrix(grid.size());
    for (std::size_t row = 0; row < grid.size(); ++row)
        for (std::size_t col = 0; col < grid[row].size(); ++col)
            r.confusion.at(row, col) = grid[row][col];
}

}  // namespace sskd
