#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "neuram/multifidelity.hpp"
#include "neuram/neuram.hpp"
#include "neuram/sensitivity.hpp"

namespace neuram::cli {

// One declarative description of an experiment; the CLI fills it from a
// config file plus flag overrides.
struct ExperimentConfig {
    std::string kind;      // train | errors | sensitivity | mfmc | verify-theory
    std::string model;     // registry name (high-fidelity model for mfmc)
    std::string lf_model;  // low-fidelity registry name (mfmc only)

    int n = 1000;       // training sample count
    int test_n = 1000;  // test-set size for error metrics
    std::vector<int> n_list{10, 30, 50, 100, 500, 1000};

    std::uint64_t base_seed = 0;
    int seed_count = 1;
    std::vector<std::uint64_t> seeds;  // explicit list wins over base/count

    int repetitions = 100;   // mfmc repetitions / theory pairs
    double budget = 1000.0;  // mfmc budget B
    double cost_ratio = 0.01;
    int pilot_n = 1000;
    int corr_sample_n = 1000;  // per-repetition correlation sample
    int pair_length = 200;     // verify-theory pilot length

    int grid_size = 1000;  // sensitivity latent grid
    int sobol_n = 1 << 14;

    TrainConfig train;
    std::string out_dir = ".";
    std::string artifact_path;  // sensitivity: load instead of training
    bool save_artifacts = false;
    int jobs = 1;
    bool keep_going = false;

    std::vector<std::uint64_t> seed_list() const;
};

struct RunReport {
    std::string kind;
    nlohmann::json config;     // echo of the experiment configuration
    nlohmann::json per_seed;   // array, one row per seed/repetition
    nlohmann::json aggregate;  // statistics recomputable from per_seed
    double wall_clock_s = 0.0;
    std::vector<std::string> artifact_paths;
    std::vector<std::string> csv_paths;
    int failures = 0;
};

RunReport run(const ExperimentConfig& config);

RunReport run_train(const ExperimentConfig& config);
RunReport run_errors(const ExperimentConfig& config);
RunReport run_sensitivity(const ExperimentConfig& config);
RunReport run_mfmc(const ExperimentConfig& config);
RunReport run_verify_theory(const ExperimentConfig& config);

// Long-format CSV extraction from a report: (N, metric, mean, std) for error
// studies, (estimator, repetition, value) for mfmc, (t, input, theta) for
// sensitivity. Throws on an unknown kind or an empty per-seed table.
std::vector<std::string> emit_plot_data(const RunReport& report, const std::string& out_dir);

void save_report(const RunReport& report, const std::string& path);
RunReport load_report(const std::string& path);

// Fan-out over independent items with a small worker pool; results land in
// index order so output is deterministic regardless of scheduling.
void parallel_for(int n_items, int jobs, const std::function<void(int)>& fn);

}  // namespace neuram::cli
