#include "sskd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <tuple>

#include "sskd/augment.hpp"
#include "sskd/serialize.hpp"

namespace fs = std::filesystem;

namespace sskd {

std::string mode_name(ExperimentMode mode) {
    return mode == ExperimentMode::baseline_fsl ? "baseline-fsl" : "proposed-ssl";
}

namespace {

ExperimentMode mode_from_name(const std::string& name) {
    if (name == "baseline-fsl") return ExperimentMode::baseline_fsl;
    if (name == "proposed-ssl") return ExperimentMode::proposed_ssl;
    throw ConfigError("mode: expected 'baseline-fsl' or 'proposed-ssl', got '" + name + "'");
}

std::string trim_number(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string percent_pm(double mean, double se) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f±%.2f", 100.0 * mean, 100.0 * se);
    return buf;
}

struct Aggregate {
    double mean = 0.0;
    double se = 0.0;
};

Aggregate aggregate(const std::vector<double>& xs) {
    Aggregate a;
    if (xs.empty()) return a;
    for (double x : xs) a.mean += x;
    a.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - a.mean) * (x - a.mean);
        const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        a.se = sd / std::sqrt(static_cast<double>(xs.size()));
    }
    return a;
}

Dataset materialize_dataset(const DatasetSource& source) {
    if (source.synthetic)
        return generate_synthetic(*source.synthetic, source.synthetic_seed);
    return load_dataset(source.manifest);
}

// Aggregated view of one member-metrics list ("Proposed (KD)" row).
nlohmann::json member_mean_json(const std::vector<MetricsReport>& members) {
    double bacc = 0.0, acc = 0.0, acc_star = 0.0, f1 = 0.0;
    for (const MetricsReport& m : members) {
        bacc += m.bacc;
        acc += m.acc;
        acc_star += m.acc_star;
        f1 += m.macro_f1;
    }
    const double k = members.empty() ? 1.0 : static_cast<double>(members.size());
    return {{"bacc", bacc / k},
            {"acc", acc / k},
            {"acc_star", acc_star / k},
            {"macro_f1", f1 / k}};
}

}  // namespace

std::string SweepPoint::label() const {
    return "K" + std::to_string(ensemble_size) + "_p" + trim_number(labeled_fraction) +
           "_lam" + trim_number(lambda) + "_T" + trim_number(temperature) + "_tau" +
           trim_number(tau);
}

void ExperimentConfig::validate() const {
    if (schema_version != 1)
        throw ConfigError("schema_version: only version 1 is understood");
    if (name.empty() || name.find('/') != std::string::npos ||
        name.find('\\') != std::string::npos)
        throw ConfigError("name: must be non-empty and free of path separators");
    if (static_cast<bool>(dataset.synthetic) == !dataset.manifest.empty())
        throw ConfigError("dataset: exactly one of 'synthetic' or 'manifest' is required");
    const double sum = train_fraction + validation_fraction + test_fraction;
    if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("split fractions: train+validation+test must sum to 1");
    if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0))
        throw ConfigError("labeled_fraction: must lie in (0, 1]");
    if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
    if (output_dir.empty()) throw ConfigError("output_dir: must be non-empty");
    for (double t : sweep.tau)
        if (!(t > 0.0 && t <= 1.0)) throw ConfigError("sweep.tau: values must lie in (0, 1]");
    for (double l : sweep.lambda)
        if (l < 0.0) throw ConfigError("sweep.lambda: values must be >= 0");
    for (double p : sweep.labeled_fraction)
        if (!(p > 0.0 && p <= 1.0))
            throw ConfigError("sweep.labeled_fraction: values must lie in (0, 1]");
    for (double t : sweep.temperature)
        if (!(t > 0.0)) throw ConfigError("sweep.temperature: values must be > 0");
    for (int k : sweep.ensemble_size)
        if (k < 1) throw ConfigError("sweep.ensemble_size: values must be >= 1");
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    try {
        cfg.schema_version = j.value("schema_version", cfg.schema_version);
        cfg.name = j.value("name", cfg.name);

        if (j.contains("dataset")) {
            const auto& d = j.at("dataset");
            if (d.contains("synthetic")) {
                SyntheticSpec spec;
                const auto& s = d.at("synthetic");
                if (s.contains("profile")) {
                    const std::string profile = s.at("profile").get<std::string>();
                    if (profile == "blobs4") spec = blobs4_spec();
                    else if (profile == "isic2018") {
                        spec.class_counts = isic2018_class_counts();
                        spec.num_classes = static_cast<int>(spec.class_counts.size());
                        spec.dim = 16;
                    } else {
                        throw ConfigError("dataset.synthetic.profile: unknown profile '" +
                                          profile + "'");
                    }
                }
                from_json(s, spec);
                cfg.dataset.synthetic = spec;
                cfg.dataset.synthetic_seed = s.value("seed", blobs4_dataset_seed());
            }
            cfg.dataset.manifest = d.value("manifest", std::string());
        }

        if (j.contains("split")) {
            const auto& s = j.at("split");
            cfg.train_fraction = s.value("train", cfg.train_fraction);
            cfg.validation_fraction = s.value("validation", cfg.validation_fraction);
            cfg.test_fraction = s.value("test", cfg.test_fraction);
            cfg.labeled_fraction = s.value("labeled_fraction", cfg.labeled_fraction);
        }
        cfg.seeds = j.value("seeds", cfg.seeds);

        if (j.contains("train")) j.at("train").get_to(cfg.train);

        if (j.contains("augment")) {
            const auto& a = j.at("augment");
            AugmentationPolicy weak, strong, eval;
            weak.kind = AugmentKind::weak;
            strong.kind = AugmentKind::strong;
            eval.kind = AugmentKind::eval;
            const auto resize = a.value("resize_height", std::size_t{0});
            const auto crop = a.value("crop_size", std::size_t{0});
            const auto rotations =
                a.value("rotations_deg", std::vector<int>{0, 90, 180, 270});
            const double hflip = a.value("hflip_prob", 0.5);
            const double vflip = a.value("vflip_prob", 0.5);
            weak.resize_height = strong.resize_height = eval.resize_height = resize;
            weak.crop_size = strong.crop_size = eval.crop_size = crop;
            weak.rotations_deg = strong.rotations_deg = rotations;
            weak.hflip_prob = strong.hflip_prob = hflip;
            weak.vflip_prob = strong.vflip_prob = vflip;
            weak.noise_scale = a.value("weak_noise", 0.1);
            strong.noise_scale = a.value("strong_noise", 0.3);
            strong.feature_drop_prob = a.value("feature_drop_prob", 0.1);
            cfg.train.weak_policy = weak;
            cfg.train.strong_policy = strong;
            cfg.train.eval_policy = eval;
        }

        cfg.mode = mode_from_name(j.value("mode", mode_name(cfg.mode)));

        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            cfg.sweep.tau = s.value("tau", cfg.sweep.tau);
            cfg.sweep.lambda = s.value("lambda", cfg.sweep.lambda);
            cfg.sweep.labeled_fraction =
                s.value("labeled_fraction", cfg.sweep.labeled_fraction);
            cfg.sweep.temperature = s.value("temperature", cfg.sweep.temperature);
            cfg.sweep.ensemble_size = s.value("ensemble_size", cfg.sweep.ensemble_size);
        }
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_experiment_config(j);
}

nlohmann::json experiment_config_json(const ExperimentConfig& cfg) {
    nlohmann::json dataset;
    if (cfg.dataset.synthetic) {
        dataset["synthetic"] = *cfg.dataset.synthetic;
        dataset["synthetic"]["seed"] = cfg.dataset.synthetic_seed;
    } else {
        dataset["manifest"] = cfg.dataset.manifest;
    }
    return {{"schema_version", cfg.schema_version},
            {"name", cfg.name},
            {"dataset", dataset},
            {"split",
             {{"train", cfg.train_fraction},
              {"validation", cfg.validation_fraction},
              {"test", cfg.test_fraction},
              {"labeled_fraction", cfg.labeled_fraction}}},
            {"seeds", cfg.seeds},
            {"train", cfg.train},
            {"mode", mode_name(cfg.mode)},
            {"sweep",
             {{"tau", cfg.sweep.tau},
              {"lambda", cfg.sweep.lambda},
              {"labeled_fraction", cfg.sweep.labeled_fraction},
              {"temperature", cfg.sweep.temperature},
              {"ensemble_size", cfg.sweep.ensemble_size}}},
            {"output_dir", cfg.output_dir}};
}

namespace {

TrainConfig resolve_train_config(const ExperimentConfig& cfg, const SweepPoint& point,
                                 const Dataset& ds, std::uint64_t seed) {
    TrainConfig tc = cfg.train;
    tc.ensemble_size = point.ensemble_size;
    tc.lambda = point.lambda;
    tc.tau = point.tau;
    tc.temperature = point.temperature;
    tc.seed = seed;
    tc.diagnostics_dir = cfg.output_dir + "/diagnostics";

    tc.model.num_classes = static_cast<std::size_t>(ds.num_classes);
    const Example& probe = ds.examples.front();
    if (is_raster(probe.payload)) {
        tc.model.kind = ModelKind::conv;
        const std::size_t side = tc.strong_policy.crop_size
                                     ? tc.strong_policy.crop_size
                                     : std::get<RasterGrid>(probe.payload).height;
        tc.model.input_height = side;
        tc.model.input_width = side;
        tc.model.input_dim = 0;
    } else {
        tc.model.kind = ModelKind::mlp;
        tc.model.input_dim = std::get<std::vector<double>>(probe.payload).size();
    }

    if (cfg.mode == ExperimentMode::baseline_fsl) {
        // FSL baseline: labeled data only, one round, independently trained
        // members (no distillation).
        tc.ssl_iterations = 1;
        tc.lambda = 0.0;
    }
    return tc;
}

}  // namespace

RunOutcome run_single(const ExperimentConfig& cfg, const SweepPoint& point,
                      std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();

    Dataset ds = materialize_dataset(cfg.dataset);
    SplitSpec split_spec;
    split_spec.train_fraction = cfg.train_fraction;
    split_spec.validation_fraction = cfg.validation_fraction;
    split_spec.test_fraction = cfg.test_fraction;
    split_spec.labeled_fraction = point.labeled_fraction;
    split_spec.seed = seed;
    const SplitResult split = stratified_split(ds, split_spec);

    DatasetPools pools = mask_labels(split.train, point.labeled_fraction, seed);
    const NormalizationStats stats = fit_normalizer(pools.labeled);

    TrainConfig tc = resolve_train_config(cfg, point, ds, seed);
    tc.weak_policy.stats = stats;
    tc.strong_policy.stats = stats;
    tc.eval_policy.stats = stats;

    if (cfg.mode == ExperimentMode::baseline_fsl) pools.unlabeled.clear();

    const SslRunOutput main_run = run_ssl(tc, pools, split.validation.examples);

    // Paired single model: identical seed, splits and pools, ensemble of one.
    SslRunOutput single_run;
    const bool separate_single = tc.ensemble_size > 1;
    if (separate_single) {
        TrainConfig tc1 = tc;
        tc1.ensemble_size = 1;
        single_run = run_ssl(tc1, pools, split.validation.examples);
    }

    RunOutcome outcome;
    outcome.point = point;
    outcome.seed = seed;
    outcome.test_ensemble = evaluate_ensemble(main_run.best_ensemble,
                                              split.test.examples, tc.eval_policy);
    for (const ClassifierModel& member : main_run.best_ensemble.members)
        outcome.test_members.push_back(
            evaluate_model(member, split.test.examples, tc.eval_policy));
    outcome.test_single =
        separate_single
            ? evaluate_ensemble(single_run.best_ensemble, split.test.examples,
                                tc.eval_policy)
            : outcome.test_ensemble;

    nlohmann::json members = nlohmann::json::array();
    for (const MetricsReport& m : outcome.test_members) members.push_back(m);

    nlohmann::json pseudo = nlohmann::json::array();
    for (const IterationRecord& rec : main_run.history)
        pseudo.push_back({{"iteration", rec.iteration},
                          {"admitted", rec.pseudo_admitted},
                          {"correct", rec.pseudo_correct},
                          {"labeled_after", rec.labeled_after},
                          {"unlabeled_after", rec.unlabeled_after}});

    outcome.document = {
        {"schema_version", 1},
        {"name", cfg.name},
        {"mode", mode_name(cfg.mode)},
        {"config_hash", config_hash(experiment_config_json(cfg))},
        {"seed", seed},
        {"point",
         {{"ensemble_size", point.ensemble_size},
          {"lambda", point.lambda},
          {"tau", point.tau},
          {"temperature", point.temperature},
          {"labeled_fraction", point.labeled_fraction}}},
        {"pools_initial",
         {{"labeled", pools.labeled.size()}, {"unlabeled", pools.unlabeled.size()}}},
        {"test",
         {{"ensemble", outcome.test_ensemble},
          {"members", std::move(members)},
          {"member_mean", member_mean_json(outcome.test_members)},
          {"single", outcome.test_single}}},
        {"pseudo_audit", std::move(pseudo)},
        {"history", history_to_json(main_run)},
        {"single_history",
         separate_single ? history_to_json(single_run) : nlohmann::json()}};

    outcome.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return outcome;
}

namespace {

std::vector<SweepPoint> build_points(const ExperimentConfig& cfg, bool use_sweep) {
    SweepPoint base;
    base.tau = cfg.train.tau;
    base.lambda = cfg.train.lambda;
    base.labeled_fraction = cfg.labeled_fraction;
    base.temperature = cfg.train.temperature;
    base.ensemble_size = cfg.train.ensemble_size;
    if (!use_sweep || cfg.sweep.empty()) return {base};

    const auto taus = cfg.sweep.tau.empty() ? std::vector<double>{base.tau} : cfg.sweep.tau;
    const auto lambdas =
        cfg.sweep.lambda.empty() ? std::vector<double>{base.lambda} : cfg.sweep.lambda;
    const auto ps = cfg.sweep.labeled_fraction.empty()
                        ? std::vector<double>{base.labeled_fraction}
                        : cfg.sweep.labeled_fraction;
    const auto temps = cfg.sweep.temperature.empty()
                           ? std::vector<double>{base.temperature}
                           : cfg.sweep.temperature;
    const auto ks = cfg.sweep.ensemble_size.empty() ? std::vector<int>{base.ensemble_size}
                                                    : cfg.sweep.ensemble_size;
    std::vector<SweepPoint> points;
    for (double p : ps)
        for (int k : ks)
            for (double lam : lambdas)
                for (double temp : temps)
                    for (double tau : taus) {
                        SweepPoint pt = base;
                        pt.labeled_fraction = p;
                        pt.ensemble_size = k;
                        pt.lambda = lam;
                        pt.temperature = temp;
                        pt.tau = tau;
                        points.push_back(pt);
                    }
    return points;
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, bool use_sweep, int threads) {
    cfg.validate();
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir / "runs");
    fs::create_directories(out_dir / "tables");

    const auto points = build_points(cfg, use_sweep);
    struct Task {
        SweepPoint point;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (const SweepPoint& pt : points)
        for (std::uint64_t seed : cfg.seeds) tasks.push_back({pt, seed});

    std::vector<double> seconds(tasks.size(), 0.0);
    std::vector<std::string> failures(tasks.size());
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> diverged{false};
    std::mutex io_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            const std::string run_name =
                cfg.name + "__" + task.point.label() + "__seed" + std::to_string(task.seed);
            try {
                RunOutcome outcome = run_single(cfg, task.point, task.seed);
                seconds[i] = outcome.wall_seconds;
                std::ofstream out(out_dir / "runs" / (run_name + ".json"));
                out << outcome.document.dump(2) << "\n";
                if (!out) throw ParseError("short write: " + run_name);
                std::lock_guard<std::mutex> lock(io_mutex);
                std::cerr << "[run] " << run_name << " done ("
                          << trim_number(outcome.wall_seconds) << "s)\n";
            } catch (const DivergenceError& e) {
                diverged = true;
                failures[i] = e.what();
                std::lock_guard<std::mutex> lock(io_mutex);
                std::cerr << "[run] " << run_name << " DIVERGED: " << e.what() << "\n";
            } catch (const std::exception& e) {
                failures[i] = e.what();
                std::lock_guard<std::mutex> lock(io_mutex);
                std::cerr << "[run] " << run_name << " FAILED: " << e.what() << "\n";
            }
        }
    };

    const std::size_t n_workers =
        std::max<std::size_t>(1, std::min<std::size_t>(tasks.size(),
                                                       threads < 1 ? 1 : threads));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    {
        std::ofstream timing(out_dir / "timing.csv", std::ios::app);
        for (std::size_t i = 0; i < tasks.size(); ++i)
            if (failures[i].empty())
                timing << cfg.name << "__" << tasks[i].point.label() << "__seed"
                       << tasks[i].seed << "," << seconds[i] << "\n";
    }

    bool any_failed = false;
    for (const std::string& f : failures)
        if (!f.empty()) any_failed = true;

    const int report_rc = write_report(cfg.output_dir);
    if (diverged) return 3;
    if (any_failed || report_rc != 0) return 4;
    return 0;
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

namespace {

struct RowKey {
    double p, ensemble_size, lambda, temperature, tau;
    std::string method;

    bool operator<(const RowKey& o) const {
        return std::tie(p, ensemble_size, lambda, temperature, tau, method) <
               std::tie(o.p, o.ensemble_size, o.lambda, o.temperature, o.tau, o.method);
    }
};

struct RowValues {
    std::vector<double> bacc, acc, acc_star, macro_f1;
};

void add_metrics(RowValues& row, const nlohmann::json& m) {
    row.bacc.push_back(m.at("bacc").get<double>());
    row.acc.push_back(m.at("acc").get<double>());
    row.acc_star.push_back(m.at("acc_star").get<double>());
    row.macro_f1.push_back(m.at("macro_f1").get<double>());
}

}  // namespace

int write_report(const std::string& output_dir) {
    const fs::path runs_dir = fs::path(output_dir) / "runs";
    if (!fs::exists(runs_dir))
        throw ConfigError("no run results found under " + output_dir +
                          " (expected a runs/ directory)");

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(runs_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw ConfigError("no run results found under " + output_dir);

    bool partial = false;
    std::map<RowKey, RowValues> rows;
    std::set<double> tau_seen, lambda_seen, p_seen, temp_seen;
    std::set<int> k_seen;

    for (const fs::path& file : files) {
        nlohmann::json doc;
        try {
            std::ifstream in(file);
            in >> doc;
            const auto& point = doc.at("point");
            const double p = point.at("labeled_fraction").get<double>();
            const int k = point.at("ensemble_size").get<int>();
            const double lam = point.at("lambda").get<double>();
            const double temp = point.at("temperature").get<double>();
            const double tau = point.at("tau").get<double>();
            const std::string mode = doc.at("mode").get<std::string>();
            const bool baseline = mode == "baseline-fsl";
            const std::string prefix = baseline ? "Baseline" : "Proposed";

            tau_seen.insert(tau);
            lambda_seen.insert(lam);
            p_seen.insert(p);
            temp_seen.insert(temp);
            k_seen.insert(k);

            const RowKey base{p, static_cast<double>(k), lam, temp, tau, ""};
            const auto& test = doc.at("test");

            RowKey ensemble_key = base;
            ensemble_key.method = prefix + " (K=" + std::to_string(k) + ")";
            add_metrics(rows[ensemble_key], test.at("ensemble"));

            if (k > 1) {
                if (!baseline) {
                    RowKey kd_key = base;
                    kd_key.method = "Proposed (KD)";
                    add_metrics(rows[kd_key], test.at("member_mean"));
                }
                RowKey single_key = base;
                single_key.method = prefix + " (K=1)";
                add_metrics(rows[single_key], test.at("single"));
            }
        } catch (const std::exception& e) {
            std::cerr << "[report] warning: skipping " << file.string() << ": " << e.what()
                      << "\n";
            partial = true;
        }
    }
    if (rows.empty())
        throw ConfigError("no readable run results under " + output_dir);

    const fs::path tables_dir = fs::path(output_dir) / "tables";
    fs::create_directories(tables_dir);

    {
        std::ofstream out(tables_dir / "summary.csv");
        out << "method,p,K,lambda,T,tau,BAcc,Acc,AccStar,F1\n";
        for (const auto& [key, values] : rows) {
            const Aggregate bacc = aggregate(values.bacc);
            const Aggregate acc = aggregate(values.acc);
            const Aggregate acc_star = aggregate(values.acc_star);
            const Aggregate f1 = aggregate(values.macro_f1);
            out << key.method << "," << trim_number(key.p) << ","
                << trim_number(key.ensemble_size) << "," << trim_number(key.lambda) << ","
                << trim_number(key.temperature) << "," << trim_number(key.tau) << ","
                << percent_pm(bacc.mean, bacc.se) << "," << percent_pm(acc.mean, acc.se)
                << "," << percent_pm(acc_star.mean, acc_star.se) << ","
                << percent_pm(f1.mean, f1.se) << "\n";
        }
    }

    // Plain x/y files for every axis that actually varies.
    struct AxisInfo {
        std::string name;
        std::size_t count;
        std::function<double(const RowKey&)> get;
    };
    const std::vector<AxisInfo> axes = {
        {"tau", tau_seen.size(), [](const RowKey& k) { return k.tau; }},
        {"lambda", lambda_seen.size(), [](const RowKey& k) { return k.lambda; }},
        {"p", p_seen.size(), [](const RowKey& k) { return k.p; }},
        {"T", temp_seen.size(), [](const RowKey& k) { return k.temperature; }},
        {"K", k_seen.size(), [](const RowKey& k) { return k.ensemble_size; }},
    };
    const std::vector<std::pair<std::string, std::vector<double> RowValues::*>> metrics = {
        {"bacc", &RowValues::bacc},
        {"acc", &RowValues::acc},
        {"acc_star", &RowValues::acc_star},
        {"f1", &RowValues::macro_f1}};

    for (const AxisInfo& axis : axes) {
        if (axis.count < 2) continue;
        // Methods present for this axis, in stable order.
        std::set<std::string> methods;
        for (const auto& [key, values] : rows) methods.insert(key.method);
        for (const auto& [metric_name, member] : metrics) {
            std::map<double, std::map<std::string, Aggregate>> grid;
            for (const auto& [key, values] : rows)
                grid[axis.get(key)][key.method] = aggregate(values.*member);
            std::ofstream out(tables_dir /
                              ("sweep_" + axis.name + "_" + metric_name + ".csv"));
            out << "x";
            for (const std::string& m : methods) out << "," << m << "_mean," << m << "_se";
            out << "\n";
            for (const auto& [x, per_method] : grid) {
                out << trim_number(x);
                for (const std::string& m : methods) {
                    auto it = per_method.find(m);
                    if (it == per_method.end()) out << ",,";
                    else
                        out << "," << trim_number(100.0 * it->second.mean) << ","
                            << trim_number(100.0 * it->second.se);
                }
                out << "\n";
            }
        }
    }

    return partial ? 4 : 0;
}

}  // namespace sskd
