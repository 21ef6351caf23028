#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sskd/dataset.hpp"
#include "sskd/metrics.hpp"
#include "sskd/trainer.hpp"

namespace sskd {

enum class ExperimentMode { baseline_fsl, proposed_ssl };

std::string mode_name(ExperimentMode mode);

/// Where the examples come from: a generated blob dataset or a manifest file.
struct DatasetSource {
    std::optional<SyntheticSpec> synthetic;
    std::uint64_t synthetic_seed = 0;
    std::string manifest;  // used when synthetic is absent
};

/// Optional grid axes; the sweep runs their cartesian product.
struct SweepAxes {
    std::vector<double> tau;
    std::vector<double> lambda;
    std::vector<double> labeled_fraction;
    std::vector<double> temperature;
    std::vector<int> ensemble_size;

    bool empty() const {
        return tau.empty() && lambda.empty() && labeled_fraction.empty() &&
               temperature.empty() && ensemble_size.empty();
    }
};

/// One JSON document drives a whole experiment: dataset, splits, training
/// recipe, mode, seeds, optional sweep axes. See docs/formats.md for the
/// schema.
struct ExperimentConfig {
    int schema_version = 1;
    std::string name = "experiment";
    DatasetSource dataset;
    double train_fraction = 0.7;
    double validation_fraction = 0.1;
    double test_fraction = 0.2;
    double labeled_fraction = 0.1;  // p
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    TrainConfig train;
    ExperimentMode mode = ExperimentMode::proposed_ssl;
    SweepAxes sweep;
    std::string output_dir = "out";

    void validate() const;
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json experiment_config_json(const ExperimentConfig& cfg);

/// The values that vary across a sweep, fully resolved for one grid point.
struct SweepPoint {
    double tau = 0.0;
    double lambda = 0.0;
    double labeled_fraction = 0.0;
    double temperature = 0.0;
    int ensemble_size = 0;

    std::string label() const;
};

/// In-memory result of one (sweep point, seed) run; serialized form lands in
/// <out>/runs/<name>__<point>__seed<seed>.json.
struct RunOutcome {
    SweepPoint point;
    std::uint64_t seed = 0;
    MetricsReport test_ensemble;
    std::vector<MetricsReport> test_members;
    MetricsReport test_single;
    nlohmann::json document;
    double wall_seconds = 0.0;  // recorded in timing.csv, never in the document
};

/// Runs one fully-resolved (point, seed) experiment and builds its document.
RunOutcome run_single(const ExperimentConfig& cfg, const SweepPoint& point,
                      std::uint64_t seed);

/// Executes every (sweep point, seed) pair, honoring `sweep_axes` only when
/// `use_sweep` is set (the `run` verb ignores them; `sweep` honors them).
/// Writes run documents, timing.csv, and the aggregate tables. Returns a
/// process exit code: 0 success, 3 divergence somewhere, 4 other partial
/// failure.
int run_experiment(const ExperimentConfig& cfg, bool use_sweep, int threads,
                   bool quiet = false);

/// Re-aggregates an output directory into tables/*.csv. Returns 0, or 4 when
/// malformed run files had to be skipped. Throws ConfigError when the
/// directory holds no runs at all.
int write_report(const std::string& output_dir);

}  // namespace sskd
