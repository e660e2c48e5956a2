#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "neuram/experiment.hpp"
#include "neuram/models.hpp"

using namespace neuram;
using namespace neuram::cli;
namespace fs = std::filesystem;

namespace {

std::string fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("neuram_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

ExperimentConfig small_errors_config(const std::string& out) {
    ExperimentConfig config;
    config.kind = "errors";
    config.model = "sin_parabola";
    config.n_list = {20, 100};
    config.test_n = 200;
    config.base_seed = 3;
    config.seed_count = 3;
    config.train.epochs = 400;
    config.train.search_trials = 0;
    config.out_dir = out;
    config.jobs = 2;
    return config;
}

}  // namespace

TEST_CASE("seed_list: base/count expansion and explicit override") {
    ExperimentConfig config;
    config.base_seed = 10;
    config.seed_count = 3;
    CHECK(config.seed_list() == std::vector<std::uint64_t>{10, 11, 12});
    config.seeds = {99, 7};
    CHECK(config.seed_list() == std::vector<std::uint64_t>{99, 7});
}

TEST_CASE("parallel_for: deterministic fill and exception propagation") {
    std::vector<int> out(50, -1);
    parallel_for(50, 4, [&](int i) { out[i] = i * i; });
    for (int i = 0; i < 50; ++i) CHECK(out[i] == i * i);
    CHECK_THROWS_AS(
        parallel_for(10, 3, [](int i) { if (i == 5) throw std::runtime_error("boom"); }),
        std::runtime_error);
}

TEST_CASE("run_errors: CSVs exist, aggregates recompute from per-seed rows") {
    std::string out = fresh_dir("errors");
    RunReport report = run(small_errors_config(out));
    CHECK(report.kind == "errors");
    CHECK(report.failures == 0);
    REQUIRE(report.per_seed.size() == 6);  // 2 sizes x 3 seeds
    for (const auto& path : report.csv_paths) CHECK(fs::exists(path));

    // aggregate rows must equal a recomputation from the per-seed rows
    for (const auto& agg : report.aggregate) {
        int n = agg["n"].get<int>();
        std::string metric = agg["metric"].get<std::string>();
        Vec values;
        for (const auto& row : report.per_seed)
            if (row["n"].get<int>() == n) values.push_back(row[metric].get<double>());
        REQUIRE(values.size() == 3);
        CHECK(std::abs(agg["mean"].get<double>() - mean_of(values)) < 1e-12);
        CHECK(std::abs(agg["std"].get<double>() - stddev_of(values)) < 1e-12);
    }
}

TEST_CASE("run_errors: identical config gives byte-identical CSV outputs") {
    std::string out_a = fresh_dir("repro_a");
    std::string out_b = fresh_dir("repro_b");
    ExperimentConfig a = small_errors_config(out_a);
    a.n_list = {20};
    a.seed_count = 2;
    a.jobs = 2;
    ExperimentConfig b = a;
    b.out_dir = out_b;
    b.jobs = 1;  // scheduling must not leak into the outputs
    RunReport ra = run(a);
    RunReport rb = run(b);
    REQUIRE(ra.csv_paths.size() == rb.csv_paths.size());
    for (std::size_t i = 0; i < ra.csv_paths.size(); ++i)
        CHECK(slurp(ra.csv_paths[i]) == slurp(rb.csv_paths[i]));
}

TEST_CASE("run_errors: keep-going records the failure and continues") {
    std::string out = fresh_dir("keepgoing");
    ExperimentConfig config = small_errors_config(out);
    config.n_list = {1, 50};  // n = 1 cannot train
    config.keep_going = true;
    RunReport report = run(config);
    CHECK(report.failures == 3);  // one per seed at n = 1
    int ok_rows = 0;
    for (const auto& row : report.per_seed)
        if (!row.contains("error")) ++ok_rows;
    CHECK(ok_rows == 3);
}

TEST_CASE("run_train: saves artifacts and aggregates losses") {
    std::string out = fresh_dir("train");
    ExperimentConfig config;
    config.kind = "train";
    config.model = "parabola";
    config.n = 80;
    config.base_seed = 1;
    config.seed_count = 2;
    config.train.epochs = 300;
    config.train.search_trials = 0;
    config.out_dir = out;
    RunReport report = run(config);
    REQUIRE(report.artifact_paths.size() == 2);
    for (const auto& p : report.artifact_paths) {
        CHECK(fs::exists(p));
        NeurAMArtifact art = load_artifact(p);
        CHECK(art.report.n_samples == 80);
    }
    Vec losses;
    for (const auto& row : report.per_seed) losses.push_back(row["loss_total"].get<double>());
    CHECK(report.aggregate["loss_total_mean"].get<double>() ==
          doctest::Approx(mean_of(losses)).epsilon(1e-14));
}

TEST_CASE("run_sensitivity: local CSV carries named columns, global indices sum to one") {
    std::string out = fresh_dir("sens");
    ExperimentConfig config;
    config.kind = "sensitivity";
    config.model = "parabola";
    config.n = 150;
    config.base_seed = 4;
    config.seed_count = 1;
    config.grid_size = 200;
    config.sobol_n = 2048;
    config.train.epochs = 800;
    config.train.search_trials = 0;
    config.out_dir = out;
    RunReport report = run(config);

    std::string local = slurp(report.csv_paths[0]);
    CHECK(local.rfind("t,theta_x1,theta_x2", 0) == 0);
    std::string summary = slurp(report.csv_paths[1]);
    CHECK(summary.rfind("input,Theta,Sobol", 0) == 0);

    double sum = 0.0;
    for (const auto& v : report.aggregate["theta_mean"]) sum += v.get<double>();
    CHECK(std::abs(sum - 1.0) < 1e-4);

    auto files = emit_plot_data(report, out);
    REQUIRE(files.size() == 1);
    std::string plot = slurp(files[0]);
    CHECK(plot.rfind("t,input,theta", 0) == 0);
    // one line per (grid point, input) plus header
    CHECK(std::count(plot.begin(), plot.end(), '\n') == 200 * 2 + 1);
}

TEST_CASE("run_sensitivity: analyzes a saved artifact without retraining") {
    std::string out = fresh_dir("sens_load");
    TrainConfig tc;
    tc.epochs = 600;
    tc.search_trials = 0;
    tc.seed = 21;
    NeurAMArtifact art = train_neuram(models::find_benchmark("parabola").spec, 150, tc);
    std::string path = out + "/artifact.json";
    save_artifact(art, path);

    ExperimentConfig config;
    config.kind = "sensitivity";
    config.model = "parabola";
    config.artifact_path = path;
    config.grid_size = 100;
    config.sobol_n = 1024;
    config.out_dir = out;
    RunReport report = run(config);
    CHECK(report.failures == 0);
    CHECK(report.per_seed.size() == 1);
}

TEST_CASE("run_mfmc: small study produces feasible plans and finite estimates") {
    std::string out = fresh_dir("mfmc");
    ExperimentConfig config;
    config.kind = "mfmc";
    config.model = "q_hf";
    config.lf_model = "q_lf";
    config.budget = 200.0;
    config.cost_ratio = 0.05;
    config.repetitions = 10;
    config.pilot_n = 300;
    config.corr_sample_n = 300;
    config.base_seed = 6;
    config.train.epochs = 1200;
    config.train.search_trials = 0;
    config.out_dir = out;
    config.jobs = 2;
    RunReport report = run(config);

    CHECK(report.failures == 0);
    REQUIRE(report.per_seed.size() == 10);
    const auto& agg = report.aggregate;
    CHECK(agg["rho_tilde_pilot"].get<double>() > agg["rho_pilot"].get<double>());
    double w = config.cost_ratio;
    for (const char* plan : {"plan_original", "plan_neuram"}) {
        double n_hf = agg[plan]["n_hf"].get<double>();
        double n_lf = agg[plan]["n_lf"].get<double>();
        if (!agg[plan]["single_fidelity"].get<bool>()) {
            CHECK(n_hf + w * n_lf <= config.budget + 1e-9);
            CHECK(n_lf >= n_hf);
        }
    }
    for (const auto& row : report.per_seed) {
        CHECK(std::isfinite(row["sf_mc"].get<double>()));
        CHECK(std::isfinite(row["mfmc_original"].get<double>()));
        CHECK(std::isfinite(row["mfmc_neuram"].get<double>()));
    }

    auto files = emit_plot_data(report, out);
    std::string plot = slurp(files[0]);
    CHECK(std::count(plot.begin(), plot.end(), '\n') == 10 * 3 + 1);

    // round trip through the report file
    std::string report_path = out + "/report.json";
    save_report(report, report_path);
    RunReport back = load_report(report_path);
    CHECK(back.kind == "mfmc");
    CHECK(back.per_seed == report.per_seed);
}

TEST_CASE("run_verify_theory: tie-free generated pairs satisfy the idealized results") {
    std::string out = fresh_dir("theory");
    ExperimentConfig config;
    config.kind = "verify-theory";
    config.repetitions = 120;
    config.pair_length = 100;
    config.base_seed = 8;
    config.out_dir = out;
    config.jobs = 2;
    RunReport report = run(config);
    CHECK(report.aggregate["pairs"].get<int>() == 120);
    CHECK(report.aggregate["mean_preserved_count"].get<int>() == 120);
    CHECK(report.aggregate["var_preserved_count"].get<int>() == 120);
    CHECK(report.aggregate["corr_improved_count"].get<int>() == 120);
    CHECK(report.aggregate["is_permutation_count"].get<int>() == 120);
}

TEST_CASE("emit_plot_data: unsupported kinds and empty reports are errors") {
    RunReport empty;
    empty.kind = "mfmc";
    empty.per_seed = nlohmann::json::array();
    CHECK_THROWS_WITH_AS(emit_plot_data(empty, fresh_dir("plot_err")),
                         doctest::Contains("no per-seed"), std::runtime_error);

    RunReport train_report;
    train_report.kind = "train";
    train_report.per_seed = nlohmann::json::array({{{"seed", 1}}});
    CHECK_THROWS_WITH_AS(emit_plot_data(train_report, fresh_dir("plot_err2")),
                         doctest::Contains("no plot data"), std::runtime_error);
}

TEST_CASE("run: unknown experiment kind is rejected") {
    ExperimentConfig config;
    config.kind = "banana";
    CHECK_THROWS_AS(run(config), std::invalid_argument);
}
