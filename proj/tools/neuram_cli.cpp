#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "neuram/experiment.hpp"
#include "neuram/models.hpp"

namespace {

using neuram::cli::ExperimentConfig;

// Options shared by every experiment subcommand. Command-line flags override
// config-file values (section named after the subcommand), which override the
// defaults.
void add_common_options(CLI::App* cmd, ExperimentConfig& config) {
    cmd->add_option("--out", config.out_dir, "output directory for CSV/JSON results")
        ->envname("NEURAM_OUT_DIR");
    cmd->add_option("--seed", config.base_seed, "base seed");
    cmd->add_option("--seed-count", config.seed_count, "number of seeds expanded from the base");
    cmd->add_option("--seeds", config.seeds, "explicit seed list (overrides base/count)");
    cmd->add_option("--jobs", config.jobs, "worker threads for independent seeds/repetitions");
    cmd->add_flag("--keep-going", config.keep_going,
                  "record per-seed failures and continue instead of aborting");
    cmd->add_option("--epochs", config.train.epochs, "training epochs");
    cmd->add_option("--learning-rate", config.train.learning_rate, "optimizer step size");
    cmd->add_option("--trials", config.train.search_trials,
                    "hyperparameter random-search budget (0 trains the fixed architecture)");
    cmd->add_option("--hidden-layers", config.train.encoder_arch.hidden_layers,
                    "fixed architecture depth when --trials 0");
    cmd->add_option("--width", config.train.encoder_arch.width,
                    "fixed architecture width when --trials 0");
}

void sync_fixed_arch(ExperimentConfig& config) {
    config.train.decoder_arch = config.train.encoder_arch;
    config.train.surrogate_arch = config.train.encoder_arch;
}

int run_and_save(ExperimentConfig& config) {
    sync_fixed_arch(config);
    neuram::cli::RunReport report = neuram::cli::run(config);
    std::string path = config.out_dir + "/report_" + report.kind + ".json";
    neuram::cli::save_report(report, path);
    std::cout << "report: " << path << "\n";
    for (const auto& csv : report.csv_paths) std::cout << "csv: " << csv << "\n";
    for (const auto& art : report.artifact_paths) std::cout << "artifact: " << art << "\n";
    std::printf("wall clock: %.2f s\n", report.wall_clock_s);
    if (report.failures > 0) {
        std::cout << report.failures << " per-seed failures recorded\n";
        return config.keep_going ? 0 : 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NeurAM: one-dimensional active-manifold surrogates with sensitivity analysis "
                 "and multifidelity Monte Carlo"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "",
                   "experiment file (TOML-style; put keys in a [subcommand] section)");

    // models list
    auto* models_cmd = app.add_subcommand("models", "benchmark model registry");
    auto* list_cmd = models_cmd->add_subcommand("list", "list registered models");

    ExperimentConfig config;

    auto* train_cmd = app.add_subcommand("train", "train a NeurAM and save the artifact");
    train_cmd->add_option("--model", config.model, "registry model name")->required();
    train_cmd->add_option("--n", config.n, "training sample count");
    train_cmd->add_option("--save-artifact", config.artifact_path,
                          "also save the first seed's artifact to this path");
    add_common_options(train_cmd, config);

    auto* errors_cmd =
        app.add_subcommand("errors", "reduction/surrogate errors as a function of N");
    errors_cmd->add_option("--model", config.model, "registry model name")->required();
    errors_cmd->add_option("--n-list", config.n_list, "training sizes");
    errors_cmd->add_option("--test-n", config.test_n, "test-set size");
    add_common_options(errors_cmd, config);

    auto* sens_cmd = app.add_subcommand("sensitivity", "local/global indices plus Sobol'");
    sens_cmd->add_option("--model", config.model, "registry model name")->required();
    sens_cmd->add_option("--n", config.n, "training sample count");
    sens_cmd->add_option("--grid", config.grid_size, "latent quadrature grid size");
    sens_cmd->add_option("--sobol-n", config.sobol_n, "Sobol' pick-freeze sample count");
    sens_cmd->add_option("--load-artifact", config.artifact_path,
                         "analyze a saved artifact instead of training");
    add_common_options(sens_cmd, config);

    auto* mfmc_cmd = app.add_subcommand("mfmc", "multifidelity Monte Carlo comparison");
    mfmc_cmd->add_option("--hf", config.model, "high-fidelity model")->required();
    mfmc_cmd->add_option("--lf", config.lf_model, "low-fidelity model")->required();
    mfmc_cmd->add_option("--budget", config.budget, "budget B in HF-evaluation units");
    mfmc_cmd->add_option("--cost-ratio", config.cost_ratio, "w = C_LF / C_HF");
    mfmc_cmd->add_option("--reps", config.repetitions, "estimation repetitions");
    mfmc_cmd->add_option("--pilot-n", config.pilot_n, "pilot sample size (also trains the NeurAMs)");
    mfmc_cmd->add_flag("--save-artifacts", config.save_artifacts, "save the two trained artifacts");
    add_common_options(mfmc_cmd, config);

    auto* theory_cmd =
        app.add_subcommand("verify-theory", "empirical checks of the idealized-setting results");
    theory_cmd->add_option("--pairs", config.repetitions, "number of random pilot pairs");
    theory_cmd->add_option("--pair-length", config.pair_length, "samples per pilot pair");
    add_common_options(theory_cmd, config);

    std::string report_path, plot_out = ".";
    auto* plot_cmd = app.add_subcommand("plot-data", "long-format CSVs from a saved report");
    plot_cmd->add_option("--report", report_path, "path to a report JSON")->required();
    plot_cmd->add_option("--out", plot_out, "output directory")->envname("NEURAM_OUT_DIR");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list_cmd->parsed() || models_cmd->parsed()) {
            for (const auto& name : neuram::models::benchmark_names()) {
                const auto& entry = neuram::models::find_benchmark(name);
                std::printf("%-14s d=%d  %s  domain", name.c_str(), entry.spec.dim,
                            entry.spec.dist.kind == neuram::DistributionSpec::Kind::uniform_box
                                ? "uniform    "
                                : "log-uniform");
                for (int i = 0; i < entry.spec.dim; ++i)
                    std::printf(" [%g,%g]", entry.spec.domain_lo[i], entry.spec.domain_hi[i]);
                if (entry.exact_mean) std::printf("  exact-mean");
                if (entry.exact_std) std::printf("  exact-std");
                if (entry.exact_global_index_1) std::printf("  exact-indices");
                if (entry.exact_reduction) std::printf("  exact-reduction");
                std::printf("\n");
            }
            return 0;
        }
        if (plot_cmd->parsed()) {
            auto report = neuram::cli::load_report(report_path);
            for (const auto& f : neuram::cli::emit_plot_data(report, plot_out))
                std::cout << "csv: " << f << "\n";
            return 0;
        }
        if (train_cmd->parsed()) config.kind = "train";
        if (errors_cmd->parsed()) config.kind = "errors";
        if (sens_cmd->parsed()) config.kind = "sensitivity";
        if (mfmc_cmd->parsed()) config.kind = "mfmc";
        if (theory_cmd->parsed()) config.kind = "verify-theory";
        return run_and_save(config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
