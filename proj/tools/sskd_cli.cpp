// Command-line front end: config-driven experiment runs, sweeps, report
// regeneration and synthetic dataset generation.
//
// Exit codes: 0 success, 2 bad config, 3 training divergence, 4 partial
// results.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sskd/dataset.hpp"
#include "sskd/experiment.hpp"
#include "sskd/serialize.hpp"

namespace {

struct CommonFlags {
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool seed_set = false;
    int threads = 1;
    std::string log_level = "info";
};

void apply_overrides(sskd::ExperimentConfig& cfg, const CommonFlags& flags) {
    if (!flags.out_override.empty()) cfg.output_dir = flags.out_override;
    if (flags.seed_set) cfg.seeds = {flags.seed_override};
}

int run_verb(const std::string& config_path, const CommonFlags& flags, bool use_sweep) {
    sskd::ExperimentConfig cfg = sskd::load_experiment_config(config_path);
    apply_overrides(cfg, flags);
    if (flags.log_level != "quiet")
        std::cerr << "[sskd] " << (use_sweep ? "sweep" : "run") << " '" << cfg.name
                  << "' -> " << cfg.output_dir << "\n";
    return sskd::run_experiment(cfg, use_sweep, flags.threads);
}

int gen_data_verb(const std::string& spec_path, const std::string& out_path) {
    std::ifstream in(spec_path);
    if (!in) throw sskd::ConfigError("cannot open spec file: " + spec_path);
    nlohmann::json j;
    in >> j;

    sskd::SyntheticSpec spec;
    if (j.contains("profile")) {
        const std::string profile = j.at("profile").get<std::string>();
        if (profile == "blobs4") spec = sskd::blobs4_spec();
        else if (profile == "isic2018") {
            spec.class_counts = sskd::isic2018_class_counts();
            spec.num_classes = static_cast<int>(spec.class_counts.size());
            spec.dim = 16;
        } else {
            throw sskd::ConfigError("unknown profile: " + profile);
        }
    }
    sskd::from_json(j, spec);
    const auto seed = j.value("seed", sskd::blobs4_dataset_seed());

    const sskd::Dataset ds = sskd::generate_synthetic(spec, seed);
    sskd::save_dataset(ds, out_path);
    std::cerr << "[sskd] wrote " << ds.examples.size() << " examples ("
              << ds.num_classes << " classes) to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble semi-supervised trainer with online distillation"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    CommonFlags flags;
    app.add_option("--threads", flags.threads, "Parallel (seed, sweep-point) workers");
    app.add_option("--log-level", flags.log_level, "quiet | info")
        ->check(CLI::IsMember({"quiet", "info"}));

    std::string config_path, report_dir, spec_path, out_path;

    CLI::App* run = app.add_subcommand("run", "Run the base configuration");
    run->add_option("config", config_path, "Experiment config JSON")->required();
    run->add_option("--out", flags.out_override, "Override output directory");
    run->add_option("--seed", flags.seed_override, "Run a single seed only")
        ->each([&flags](const std::string&) { flags.seed_set = true; });

    CLI::App* sweep = app.add_subcommand("sweep", "Run the config's sweep axes");
    sweep->add_option("config", config_path, "Experiment config JSON")->required();
    sweep->add_option("--out", flags.out_override, "Override output directory");
    sweep->add_option("--seed", flags.seed_override, "Run a single seed only")
        ->each([&flags](const std::string&) { flags.seed_set = true; });

    CLI::App* report = app.add_subcommand("report", "Rebuild tables from run results");
    report->add_option("dir", report_dir, "Experiment output directory")->required();

    CLI::App* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
    gen->add_option("spec", spec_path, "Generator spec JSON")->required();
    gen->add_option("out", out_path, "Output dataset path (CSV)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_verb(config_path, flags, false);
        if (sweep->parsed()) return run_verb(config_path, flags, true);
        if (report->parsed()) return sskd::write_report(report_dir);
        if (gen->parsed()) return gen_data_verb(spec_path, out_path);
    } catch (const sskd::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const sskd::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
