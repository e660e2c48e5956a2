#include "neuram/experiment.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "neuram/models.hpp"

namespace neuram::cli {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::uint64_t> ExperimentConfig::seed_list() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> list;
    for (int i = 0; i < seed_count; ++i) list.push_back(base_seed + static_cast<std::uint64_t>(i));
    return list;
}

void parallel_for(int n_items, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 1 || n_items <= 1) {
        for (int i = 0; i < n_items; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    int workers = std::min(jobs, n_items);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                int i = next.fetch_add(1);
                if (i >= n_items) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

namespace {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

std::string csv_path(const ExperimentConfig& config, const std::string& stem) {
    fs::create_directories(config.out_dir);
    return (fs::path(config.out_dir) / stem).string();
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-identical across runs
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << header << '\n';
    for (const auto& row : rows) out << row << '\n';
}

json config_echo(const ExperimentConfig& c) {
    json j;
    j["kind"] = c.kind;
    j["model"] = c.model;
    j["lf_model"] = c.lf_model;
    j["n"] = c.n;
    j["test_n"] = c.test_n;
    j["n_list"] = c.n_list;
    j["seeds"] = c.seed_list();
    j["repetitions"] = c.repetitions;
    j["budget"] = c.budget;
    j["cost_ratio"] = c.cost_ratio;
    j["pilot_n"] = c.pilot_n;
    j["corr_sample_n"] = c.corr_sample_n;
    j["pair_length"] = c.pair_length;
    j["grid_size"] = c.grid_size;
    j["sobol_n"] = c.sobol_n;
    j["train"] = {{"epochs", c.train.epochs},
                  {"learning_rate", c.train.learning_rate},
                  {"search_trials", c.train.search_trials},
                  {"encoder_arch", {c.train.encoder_arch.hidden_layers, c.train.encoder_arch.width}},
                  {"decoder_arch", {c.train.decoder_arch.hidden_layers, c.train.decoder_arch.width}},
                  {"surrogate_arch",
                   {c.train.surrogate_arch.hidden_layers, c.train.surrogate_arch.width}},
                  {"validation_fraction", c.train.validation_fraction}};
    j["out_dir"] = c.out_dir;
    j["artifact_path"] = c.artifact_path;
    j["jobs"] = c.jobs;
    j["keep_going"] = c.keep_going;
    return j;
}

double mean_or_zero(const Vec& v) { return v.empty() ? 0.0 : mean_of(v); }

double std_or_zero(const Vec& v) { return v.size() < 2 ? 0.0 : stddev_of(v); }

ModelSpec negated(const ModelSpec& model) {
    ModelSpec out = model;
    out.name = "-" + model.name;
    auto inner = model.eval;
    out.eval = [inner](std::span<const double> x) { return -inner(x); };
    return out;
}

}  // namespace

RunReport run_train(const ExperimentConfig& config) {
    Stopwatch clock;
    const auto& entry = models::find_benchmark(config.model);
    auto seeds = config.seed_list();

    RunReport report;
    report.kind = "train";
    report.config = config_echo(config);
    report.per_seed = json::array();

    std::vector<json> rows(seeds.size());
    std::vector<std::string> artifact_paths(seeds.size());
    parallel_for(static_cast<int>(seeds.size()), config.jobs, [&](int i) {
        TrainConfig tc = config.train;
        tc.seed = seeds[i];
        try {
            NeurAMArtifact art = train_neuram(entry.spec, config.n, tc);
            std::string path = csv_path(config, "artifact_" + config.model + "_seed" +
                                                    std::to_string(seeds[i]) + ".json");
            save_artifact(art, path);
            artifact_paths[i] = path;
            rows[i] = {{"seed", seeds[i]},
                       {"loss_total", art.report.loss_total},
                       {"loss_surrogate_manifold", art.report.loss_surrogate_manifold},
                       {"loss_surrogate_direct", art.report.loss_surrogate_direct},
                       {"loss_reconstruction", art.report.loss_reconstruction},
                       {"t_min", art.t_min},
                       {"t_max", art.t_max},
                       {"trials_run", art.report.trials_run},
                       {"artifact", path}};
        } catch (const std::exception& e) {
            if (!config.keep_going) throw;
            rows[i] = {{"seed", seeds[i]}, {"error", e.what()}};
        }
    });

    Vec losses;
    for (auto& row : rows) {
        if (row.contains("error"))
            ++report.failures;
        else
            losses.push_back(row["loss_total"].get<double>());
        report.per_seed.push_back(std::move(row));
    }
    for (auto& p : artifact_paths)
        if (!p.empty()) report.artifact_paths.push_back(p);
    if (!config.artifact_path.empty() && !report.artifact_paths.empty()) {
        save_artifact(load_artifact(report.artifact_paths.front()), config.artifact_path);
        report.artifact_paths.push_back(config.artifact_path);
    }
    report.aggregate = {{"loss_total_mean", mean_or_zero(losses)},
                        {"loss_total_std", std_or_zero(losses)},
                        {"n_trained", losses.size()}};
    report.wall_clock_s = clock.seconds();
    return report;
}

RunReport run_errors(const ExperimentConfig& config) {
    Stopwatch clock;
    const auto& entry = models::find_benchmark(config.model);
    auto seeds = config.seed_list();

    struct Item {
        int n;
        std::uint64_t seed;
    };
    std::vector<Item> items;
    for (int n : config.n_list)
        for (auto s : seeds) items.push_back({n, s});

    std::vector<json> rows(items.size());
    parallel_for(static_cast<int>(items.size()), config.jobs, [&](int i) {
        const Item& item = items[i];
        TrainConfig tc = config.train;
        tc.seed = item.seed;
        try {
            NeurAMArtifact art = train_neuram(entry.spec, item.n, tc);
            auto test = sample_inputs(entry.spec.dist, config.test_n, mix_seed(item.seed, 0x7E57));
            ErrorStats err = reduction_errors(art, entry.spec, test);
            rows[i] = {{"n", item.n},          {"seed", item.seed},   {"mae_e1", err.mae_e1},
                       {"mse_e1", err.mse_e1}, {"mae_e2", err.mae_e2}, {"mse_e2", err.mse_e2}};
        } catch (const std::exception& e) {
            if (!config.keep_going) throw;
            rows[i] = {{"n", item.n}, {"seed", item.seed}, {"error", e.what()}};
        }
    });

    RunReport report;
    report.kind = "errors";
    report.config = config_echo(config);
    report.per_seed = json::array();

    std::vector<std::string> per_seed_rows;
    for (auto& row : rows) {
        if (row.contains("error")) ++report.failures;
        report.per_seed.push_back(row);
        if (!row.contains("error")) {
            per_seed_rows.push_back(std::to_string(row["n"].get<int>()) + "," +
                                    std::to_string(row["seed"].get<std::uint64_t>()) + "," +
                                    format_g17(row["mae_e1"].get<double>()) + "," +
                                    format_g17(row["mse_e1"].get<double>()) + "," +
                                    format_g17(row["mae_e2"].get<double>()) + "," +
                                    format_g17(row["mse_e2"].get<double>()));
        }
    }

    const char* metrics[] = {"mae_e1", "mse_e1", "mae_e2", "mse_e2"};
    report.aggregate = json::array();
    std::vector<std::string> summary_rows;
    for (int n : config.n_list) {
        for (const char* metric : metrics) {
            Vec values;
            for (const auto& row : rows)
                if (!row.contains("error") && row["n"].get<int>() == n)
                    values.push_back(row[metric].get<double>());
            json agg = {{"n", n},
                        {"metric", metric},
                        {"mean", mean_or_zero(values)},
                        {"std", std_or_zero(values)},
                        {"median", values.empty() ? 0.0 : median_of(values)}};
            report.aggregate.push_back(agg);
            summary_rows.push_back(std::to_string(n) + "," + metric + "," +
                                   format_g17(agg["mean"].get<double>()) + "," +
                                   format_g17(agg["std"].get<double>()) + "," +
                                   format_g17(agg["median"].get<double>()));
        }
    }

    std::string per_seed_path = csv_path(config, "errors_" + config.model + "_per_seed.csv");
    write_csv(per_seed_path, "n,seed,mae_e1,mse_e1,mae_e2,mse_e2", per_seed_rows);
    std::string summary_path = csv_path(config, "errors_" + config.model + "_summary.csv");
    write_csv(summary_path, "n,metric,mean,std,median", summary_rows);
    report.csv_paths = {per_seed_path, summary_path};
    report.wall_clock_s = clock.seconds();
    return report;
}

RunReport run_sensitivity(const ExperimentConfig& config) {
    Stopwatch clock;
    const auto& entry = models::find_benchmark(config.model);
    auto seeds = config.seed_list();
    const int d = entry.spec.dim;

    RunReport report;
    report.kind = "sensitivity";
    report.config = config_echo(config);
    report.per_seed = json::array();

    // Sobol' comparison against the exact model (all bundled benchmarks are
    // cheap closed forms); record the choice in the report.
    sensitivity::SobolIndices sobol =
        sensitivity::sobol_first_order(entry.spec.eval, entry.spec.dist, config.sobol_n,
                                       mix_seed(config.base_seed, 0x50B));

    std::vector<json> rows(seeds.size());
    std::vector<sensitivity::SensitivityResult> results(seeds.size());
    parallel_for(static_cast<int>(seeds.size()), config.jobs, [&](int i) {
        try {
            NeurAMArtifact art;
            if (!config.artifact_path.empty() && seeds.size() == 1) {
                art = load_artifact(config.artifact_path);
            } else {
                TrainConfig tc = config.train;
                tc.seed = seeds[i];
                art = train_neuram(entry.spec, config.n, tc);
            }
            results[i] = sensitivity::analyze(manifold_view(art), config.grid_size);
            rows[i] = {{"seed", seeds[i]},
                       {"theta", results[i].global},
                       {"skipped_points", results[i].skipped_points}};
        } catch (const std::exception& e) {
            if (!config.keep_going) throw;
            rows[i] = {{"seed", seeds[i]}, {"error", e.what()}};
        }
    });

    int first_ok = -1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].contains("error"))
            ++report.failures;
        else if (first_ok < 0)
            first_ok = static_cast<int>(i);
        report.per_seed.push_back(rows[i]);
    }
    if (first_ok < 0) throw std::runtime_error("sensitivity: every seed failed");

    Vec theta_mean(d, 0.0), theta_std(d, 0.0);
    for (int k = 0; k < d; ++k) {
        Vec values;
        for (const auto& row : rows)
            if (!row.contains("error")) values.push_back(row["theta"][k].get<double>());
        theta_mean[k] = mean_or_zero(values);
        theta_std[k] = std_or_zero(values);
    }

    const auto& local = results[first_ok];
    std::string local_header = "t";
    for (const auto& name : entry.input_names) local_header += ",theta_" + name;
    std::vector<std::string> local_rows;
    for (int k = 0; k < local.grid_size; ++k) {
        std::string row = format_g17(local.t_grid[k]);
        for (int i = 0; i < d; ++i) row += "," + format_g17(local.local(k, i));
        local_rows.push_back(row);
    }
    std::string local_path = csv_path(config, "sensitivity_" + config.model + "_local.csv");
    write_csv(local_path, local_header, local_rows);

    std::vector<std::string> summary_rows;
    for (int i = 0; i < d; ++i)
        summary_rows.push_back(entry.input_names[i] + "," + format_g17(theta_mean[i]) + "," +
                               format_g17(sobol.first_order[i]));
    std::string summary_path = csv_path(config, "sensitivity_" + config.model + "_summary.csv");
    write_csv(summary_path, "input,Theta,Sobol", summary_rows);

    report.aggregate = {{"input_names", entry.input_names},
                        {"theta_mean", theta_mean},
                        {"theta_std", theta_std},
                        {"sobol_first", sobol.first_order},
                        {"sobol_raw", sobol.raw},
                        {"sobol_target", "exact-model"},
                        {"local_t", local.t_grid},
                        {"local_theta", json::array()}};
    for (int k = 0; k < local.grid_size; ++k) {
        json row = json::array();
        for (int i = 0; i < d; ++i) row.push_back(local.local(k, i));
        report.aggregate["local_theta"].push_back(row);
    }
    report.csv_paths = {local_path, summary_path};
    report.wall_clock_s = clock.seconds();
    return report;
}

RunReport run_mfmc(const ExperimentConfig& config) {
    Stopwatch clock;
    const auto& hf_entry = models::find_benchmark(config.model);
    const auto& lf_entry = models::find_benchmark(config.lf_model);
    const ModelSpec& hf = hf_entry.spec;

    // paired pilot: same inputs evaluated under both fidelities
    auto pilot = sample_inputs(hf.dist, config.pilot_n, mix_seed(config.base_seed, 0x9107));
    Vec hf_vals(pilot.size()), lf_vals(pilot.size());
    for (std::size_t i = 0; i < pilot.size(); ++i) {
        hf_vals[i] = hf.eval(pilot[i]);
        lf_vals[i] = lf_entry.spec.eval(pilot[i]);
    }
    double rho_pilot = mf::pearson(hf_vals, lf_vals);
    bool sign_flip = rho_pilot < 0.0;
    ModelSpec lf_eff = sign_flip ? negated(lf_entry.spec) : lf_entry.spec;
    Vec lf_eff_vals = lf_vals;
    if (sign_flip)
        for (double& v : lf_eff_vals) v = -v;

    // one NeurAM per fidelity, trained on the shared pilot, reused across
    // every estimation repetition
    TrainConfig tc_hf = config.train;
    tc_hf.seed = mix_seed(config.base_seed, 0xAF);
    NeurAMArtifact hf_art = train_neuram(hf, pilot, tc_hf);
    TrainConfig tc_lf = config.train;
    tc_lf.seed = mix_seed(config.base_seed, 0xBF);
    NeurAMArtifact lf_art = train_neuram(lf_eff, pilot, tc_lf);

    Vec t_hf(pilot.size()), t_lf(pilot.size());
    for (std::size_t i = 0; i < pilot.size(); ++i) {
        t_hf[i] = hf_art.encode_raw(pilot[i]);
        t_lf[i] = lf_art.encode_raw(pilot[i]);
    }
    mf::EmpiricalCdf f_hf(t_hf), f_lf(t_lf);

    auto mod_lf = [&](std::span<const double> x) {
        return mf::modified_lf(x, hf_art, lf_art, f_hf, f_lf, lf_eff);
    };

    Vec mod_vals(pilot.size());
    for (std::size_t i = 0; i < pilot.size(); ++i) mod_vals[i] = mod_lf(pilot[i]);

    double rho_tilde_pilot = mf::pearson(hf_vals, mod_vals);
    double rho_ideal = mf::ideal_correlation(hf_vals, lf_eff_vals);

    auto beta_of = [&](const Vec& lf_side) {
        double mh = mean_of(hf_vals), ml = mean_of(lf_side);
        double cov = 0.0, var = 0.0;
        for (std::size_t i = 0; i < hf_vals.size(); ++i) {
            cov += (hf_vals[i] - mh) * (lf_side[i] - ml);
            var += (lf_side[i] - ml) * (lf_side[i] - ml);
        }
        return cov / var;
    };

    mf::MfmcPlan plan_orig = mf::optimal_allocation(config.budget, config.cost_ratio,
                                                    mf::pearson(hf_vals, lf_eff_vals));
    plan_orig.beta_cv = beta_of(lf_eff_vals);
    plan_orig.sign_flip = sign_flip;
    mf::MfmcPlan plan_neuram =
        mf::optimal_allocation(config.budget, config.cost_ratio, rho_tilde_pilot);
    plan_neuram.beta_cv = beta_of(mod_vals);
    plan_neuram.sign_flip = sign_flip;
    mf::MfmcPlan plan_sf;
    plan_sf.budget = config.budget;
    plan_sf.cost_ratio = config.cost_ratio;
    plan_sf.single_fidelity = true;
    plan_sf.n_hf = static_cast<long>(std::floor(config.budget));

    std::vector<json> rows(config.repetitions);
    parallel_for(config.repetitions, config.jobs, [&](int r) {
        try {
            auto est_sf = mf::mfmc_estimate(hf, lf_eff.eval, plan_sf,
                                            mix_seed(config.base_seed, 0x5F00 + r));
            auto est_orig = mf::mfmc_estimate(hf, lf_eff.eval, plan_orig,
                                              mix_seed(config.base_seed, 0x0F00 + r));
            auto est_neuram =
                mf::mfmc_estimate(hf, mod_lf, plan_neuram, mix_seed(config.base_seed, 0xAF00 + r));

            auto xs = sample_inputs(hf.dist, config.corr_sample_n,
                                    mix_seed(config.base_seed, 0xC000 + r));
            Vec h(xs.size()), l(xs.size()), m(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) {
                h[i] = hf.eval(xs[i]);
                l[i] = lf_eff.eval(xs[i]);
                m[i] = mod_lf(xs[i]);
            }
            rows[r] = {{"repetition", r},
                       {"sf_mc", est_sf.q_hat},
                       {"mfmc_original", est_orig.q_hat},
                       {"mfmc_neuram", est_neuram.q_hat},
                       {"rho_original", mf::pearson(h, l)},
                       {"rho_neuram", mf::pearson(h, m)}};
        } catch (const std::exception& e) {
            if (!config.keep_going) throw;
            rows[r] = {{"repetition", r}, {"error", e.what()}};
        }
    });

    RunReport report;
    report.kind = "mfmc";
    report.config = config_echo(config);
    report.per_seed = json::array();

    Vec sf, orig, neuram, rho_o, rho_n;
    std::vector<std::string> est_rows, corr_rows;
    for (auto& row : rows) {
        report.per_seed.push_back(row);
        if (row.contains("error")) {
            ++report.failures;
            continue;
        }
        int r = row["repetition"].get<int>();
        sf.push_back(row["sf_mc"].get<double>());
        orig.push_back(row["mfmc_original"].get<double>());
        neuram.push_back(row["mfmc_neuram"].get<double>());
        rho_o.push_back(row["rho_original"].get<double>());
        rho_n.push_back(row["rho_neuram"].get<double>());
        est_rows.push_back("sf_mc," + std::to_string(r) + "," + format_g17(sf.back()));
        est_rows.push_back("mfmc_original," + std::to_string(r) + "," + format_g17(orig.back()));
        est_rows.push_back("mfmc_neuram," + std::to_string(r) + "," + format_g17(neuram.back()));
        corr_rows.push_back(std::to_string(r) + "," + format_g17(rho_o.back()) + "," +
                            format_g17(rho_n.back()) + "," + format_g17(rho_ideal));
    }

    report.aggregate = {
        {"rho_pilot", rho_pilot},
        {"rho_tilde_pilot", rho_tilde_pilot},
        {"rho_ideal", rho_ideal},
        {"sign_flip", sign_flip},
        {"artifact_reuse", "both artifacts trained once on the pilot and reused for all repetitions"},
        {"plan_original",
         {{"n_hf", plan_orig.n_hf}, {"n_lf", plan_orig.n_lf}, {"beta_cv", plan_orig.beta_cv},
          {"gamma", plan_orig.gamma}, {"single_fidelity", plan_orig.single_fidelity}}},
        {"plan_neuram",
         {{"n_hf", plan_neuram.n_hf}, {"n_lf", plan_neuram.n_lf}, {"beta_cv", plan_neuram.beta_cv},
          {"gamma", plan_neuram.gamma}, {"single_fidelity", plan_neuram.single_fidelity}}},
        {"sf_mc", {{"mean", mean_or_zero(sf)}, {"std", std_or_zero(sf)}}},
        {"mfmc_original", {{"mean", mean_or_zero(orig)}, {"std", std_or_zero(orig)}}},
        {"mfmc_neuram", {{"mean", mean_or_zero(neuram)}, {"std", std_or_zero(neuram)}}},
        {"rho_original_mean", mean_or_zero(rho_o)},
        {"rho_neuram_mean", mean_or_zero(rho_n)}};
    if (hf_entry.exact_mean)
        report.aggregate["exact_q"] = hf_entry.exact_mean->value;

    std::string est_path = csv_path(config, "mfmc_estimates.csv");
    write_csv(est_path, "estimator,repetition,value", est_rows);
    std::string corr_path = csv_path(config, "mfmc_correlations.csv");
    write_csv(corr_path, "repetition,rho_original,rho_neuram,rho_ideal", corr_rows);
    report.csv_paths = {est_path, corr_path};

    if (config.save_artifacts) {
        std::string hf_path = csv_path(config, "artifact_mfmc_hf.json");
        std::string lf_path = csv_path(config, "artifact_mfmc_lf.json");
        save_artifact(hf_art, hf_path);
        save_artifact(lf_art, lf_path);
        report.artifact_paths = {hf_path, lf_path};
    }
    report.wall_clock_s = clock.seconds();
    return report;
}

RunReport run_verify_theory(const ExperimentConfig& config) {
    Stopwatch clock;
    const int n = config.pair_length;
    if (n < 2) throw std::invalid_argument("verify-theory: pair length must be >= 2");

    std::vector<json> rows(config.repetitions);
    parallel_for(config.repetitions, config.jobs, [&](int p) {
        Rng rng(mix_seed(config.base_seed, 0x7E0 + p));
        Vec hf(n), lf(n);
        int family = p % 3;
        double noise = rng.uniform(0.1, 2.0);
        for (int i = 0; i < n; ++i) hf[i] = rng.normal();
        for (int i = 0; i < n; ++i) {
            switch (family) {
                case 0: lf[i] = hf[i] + noise * rng.normal(); break;
                case 1: lf[i] = std::exp(hf[i]) + noise * rng.normal(); break;
                default: lf[i] = rng.normal(); break;
            }
        }
        mf::TheoryReport rep = mf::verify_idealized_theory(hf, lf);
        rows[p] = {{"pair", p},
                   {"family", family},
                   {"rho", rep.rho},
                   {"rho_modified", rep.rho_modified},
                   {"rho_ideal", rep.rho_ideal},
                   {"tie_count", rep.tie_count},
                   {"mean_preserved", rep.mean_preserved},
                   {"var_preserved", rep.var_preserved},
                   {"corr_improved", rep.corr_improved},
                   {"is_permutation", rep.is_permutation}};
    });

    RunReport report;
    report.kind = "verify-theory";
    report.config = config_echo(config);
    report.per_seed = json::array();

    int mean_ok = 0, var_ok = 0, corr_ok = 0, perm_ok = 0;
    std::vector<std::string> csv_rows;
    for (auto& row : rows) {
        report.per_seed.push_back(row);
        mean_ok += row["mean_preserved"].get<bool>() ? 1 : 0;
        var_ok += row["var_preserved"].get<bool>() ? 1 : 0;
        corr_ok += row["corr_improved"].get<bool>() ? 1 : 0;
        perm_ok += row["is_permutation"].get<bool>() ? 1 : 0;
        csv_rows.push_back(std::to_string(row["pair"].get<int>()) + "," +
                           std::to_string(row["family"].get<int>()) + "," +
                           format_g17(row["rho"].get<double>()) + "," +
                           format_g17(row["rho_modified"].get<double>()) + "," +
                           format_g17(row["rho_ideal"].get<double>()) + "," +
                           std::to_string(row["tie_count"].get<int>()) + "," +
                           std::to_string(row["corr_improved"].get<bool>() ? 1 : 0));
    }
    report.aggregate = {{"pairs", config.repetitions},
                        {"mean_preserved_count", mean_ok},
                        {"var_preserved_count", var_ok},
                        {"corr_improved_count", corr_ok},
                        {"is_permutation_count", perm_ok}};

    std::string path = csv_path(config, "theory_pairs.csv");
    write_csv(path, "pair,family,rho,rho_modified,rho_ideal,tie_count,corr_improved", csv_rows);
    report.csv_paths = {path};
    report.wall_clock_s = clock.seconds();
    return report;
}

RunReport run(const ExperimentConfig& config) {
    if (config.repetitions < 1)
        throw std::invalid_argument("experiment: repetitions must be >= 1");
    if (config.kind == "train") return run_train(config);
    if (config.kind == "errors") return run_errors(config);
    if (config.kind == "sensitivity") return run_sensitivity(config);
    if (config.kind == "mfmc") return run_mfmc(config);
    if (config.kind == "verify-theory") return run_verify_theory(config);
    throw std::invalid_argument("unknown experiment kind '" + config.kind + "'");
}

std::vector<std::string> emit_plot_data(const RunReport& report, const std::string& out_dir) {
    fs::create_directories(out_dir);
    if (report.per_seed.empty())
        throw std::runtime_error("emit_plot_data: report has no per-seed rows");

    std::vector<std::string> written;
    if (report.kind == "errors") {
        std::vector<std::string> rows;
        for (const auto& agg : report.aggregate)
            rows.push_back(std::to_string(agg["n"].get<int>()) + "," +
                           agg["metric"].get<std::string>() + "," +
                           format_g17(agg["mean"].get<double>()) + "," +
                           format_g17(agg["std"].get<double>()));
        std::string path = (fs::path(out_dir) / "plot_errors.csv").string();
        write_csv(path, "n,metric,mean,std", rows);
        written.push_back(path);
    } else if (report.kind == "mfmc") {
        std::vector<std::string> rows;
        for (const auto& row : report.per_seed) {
            if (row.contains("error")) continue;
            int r = row["repetition"].get<int>();
            for (const char* est : {"sf_mc", "mfmc_original", "mfmc_neuram"})
                rows.push_back(std::string(est) + "," + std::to_string(r) + "," +
                               format_g17(row[est].get<double>()));
        }
        if (rows.empty()) throw std::runtime_error("emit_plot_data: no successful repetitions");
        std::string path = (fs::path(out_dir) / "plot_mfmc.csv").string();
        write_csv(path, "estimator,repetition,value", rows);
        written.push_back(path);
    } else if (report.kind == "sensitivity") {
        const auto& names = report.aggregate["input_names"];
        const auto& t = report.aggregate["local_t"];
        const auto& theta = report.aggregate["local_theta"];
        std::vector<std::string> rows;
        for (std::size_t k = 0; k < t.size(); ++k)
            for (std::size_t i = 0; i < names.size(); ++i)
                rows.push_back(format_g17(t[k].get<double>()) + "," +
                               names[i].get<std::string>() + "," +
                               format_g17(theta[k][i].get<double>()));
        std::string path = (fs::path(out_dir) / "plot_sensitivity.csv").string();
        write_csv(path, "t,input,theta", rows);
        written.push_back(path);
    } else {
        throw std::runtime_error("emit_plot_data: no plot data defined for kind '" + report.kind +
                                 "'");
    }
    return written;
}

void save_report(const RunReport& report, const std::string& path) {
    json j;
    j["kind"] = report.kind;
    j["config"] = report.config;
    j["per_seed"] = report.per_seed;
    j["aggregate"] = report.aggregate;
    j["wall_clock_s"] = report.wall_clock_s;
    j["artifact_paths"] = report.artifact_paths;
    j["csv_paths"] = report.csv_paths;
    j["failures"] = report.failures;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_report: cannot open '" + path + "'");
    out << j.dump(2) << '\n';
}

RunReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_report: cannot open '" + path + "'");
    json j = json::parse(in);
    RunReport report;
    report.kind = j.at("kind").get<std::string>();
    report.config = j.at("config");
    report.per_seed = j.at("per_seed");
    report.aggregate = j.at("aggregate");
    report.wall_clock_s = j.at("wall_clock_s").get<double>();
    report.artifact_paths = j.at("artifact_paths").get<std::vector<std::string>>();
    report.csv_paths = j.at("csv_paths").get<std::vector<std::string>>();
    report.failures = j.at("failures").get<int>();
    return report;
}

}  // namespace neuram::cli
