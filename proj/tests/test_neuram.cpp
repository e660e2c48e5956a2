#include <doctest.h>

#include <cmath>

#include "neuram/models.hpp"
#include "neuram/neuram.hpp"

using namespace neuram;

namespace {

const ModelSpec& benchmark(const std::string& name) {
    return models::find_benchmark(name).spec;
}

// Straight-line recomputation of the three loss terms, independent of the
// library's accumulation. Uses forward evaluation only.
LossTerms loss_by_hand(const nn::Network& e, const nn::Network& d, const nn::Network& s,
                       const std::vector<Vec>& xs, const Vec& q) {
    LossTerms out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Vec t1 = nn::forward(e, xs[i]);
        Vec y = nn::forward(d, t1);
        Vec t2 = nn::forward(e, y);
        Vec z = nn::forward(d, t2);
        double s1 = nn::forward(s, t1)[0];
        double s2 = nn::forward(s, t2)[0];
        out.surrogate_manifold += (q[i] - s2) * (q[i] - s2);
        out.surrogate_direct += (q[i] - s1) * (q[i] - s1);
        for (std::size_t j = 0; j < y.size(); ++j)
            out.reconstruction += (y[j] - z[j]) * (y[j] - z[j]);
    }
    out.surrogate_manifold /= xs.size();
    out.surrogate_direct /= xs.size();
    out.reconstruction /= xs.size();
    return out;
}

TrainConfig fast_config(std::uint64_t seed, int epochs = 6000) {
    TrainConfig config;
    config.seed = seed;
    config.epochs = epochs;
    config.search_trials = 0;
    config.encoder_arch = {2, 10};
    config.decoder_arch = {2, 10};
    config.surrogate_arch = {2, 10};
    return config;
}

const NeurAMArtifact& trained_parabola() {
    static const NeurAMArtifact artifact = train_neuram(benchmark("parabola"), 1000, fast_config(1));
    return artifact;
}

}  // namespace

TEST_CASE("neuram_loss: the closed-form parabola triple is a global minimizer") {
    const auto& red = *models::find_benchmark("parabola").exact_reduction;
    auto xs = sample_inputs(benchmark("parabola").dist, 2000, 99);
    Vec q(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) q[i] = benchmark("parabola").eval(xs[i]);
    LossTerms terms = neuram_loss(red.pipeline.encode, red.pipeline.decode, red.pipeline.surrogate,
                                  xs, q);
    CHECK(terms.surrogate_direct == 0.0);  // identical arithmetic on both sides
    CHECK(terms.total() < 1e-28);
}

TEST_CASE("neuram_loss: constant surrogate on a degenerate batch zeroes terms one and two") {
    Vec x0{0.3, 0.4};
    double q0 = 1.7;
    std::vector<Vec> xs(5, x0);
    Vec q(5, q0);
    Vec fixed{0.25, 0.5};
    auto encode = [](std::span<const double> x) { return x[0]; };
    auto decode = [&](double) { return fixed; };
    auto surrogate = [&](double) { return q0; };
    LossTerms terms = neuram_loss(encode, decode, surrogate, xs, q);
    CHECK(terms.surrogate_manifold == 0.0);
    CHECK(terms.surrogate_direct == 0.0);
    CHECK(terms.reconstruction == 0.0);  // constant decoder reconstructs itself
}

TEST_CASE("neuram_loss: matches an independent recomputation on random networks") {
    nn::Network e = nn::make_network({2, 4, 1}, 11);
    nn::Network d = nn::make_network({1, 4, 2}, 12, nn::OutputTransform::box_squash, Vec{-1, -1},
                                     Vec{1, 1});
    nn::Network s = nn::make_network({1, 3, 1}, 13);
    Rng rng(14);
    std::vector<Vec> xs;
    Vec q;
    for (int i = 0; i < 10; ++i) {
        xs.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
        q.push_back(rng.uniform(-1, 1));
    }
    LossTerms got = neuram_loss(e, d, s, xs, q);
    LossTerms want = loss_by_hand(e, d, s, xs, q);
    CHECK(got.surrogate_manifold == doctest::Approx(want.surrogate_manifold).epsilon(1e-14));
    CHECK(got.surrogate_direct == doctest::Approx(want.surrogate_direct).epsilon(1e-14));
    CHECK(got.reconstruction == doctest::Approx(want.reconstruction).epsilon(1e-14));
    CHECK(got.surrogate_manifold >= 0.0);
    CHECK(got.surrogate_direct >= 0.0);
    CHECK(got.reconstruction >= 0.0);
    CHECK(got.total() ==
          doctest::Approx(got.surrogate_manifold + got.surrogate_direct + got.reconstruction));
}

TEST_CASE("neuram_loss: a non-finite model value names the offending sample") {
    nn::Network e = nn::make_network({2, 3, 1}, 1);
    nn::Network d = nn::make_network({1, 3, 2}, 2, nn::OutputTransform::box_squash, Vec{-1, -1},
                                     Vec{1, 1});
    nn::Network s = nn::make_network({1, 3, 1}, 3);
    std::vector<Vec> xs{{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}};
    Vec q{0.0, std::numeric_limits<double>::quiet_NaN(), 1.0};
    CHECK_THROWS_WITH_AS(neuram_loss(e, d, s, xs, q), doctest::Contains("sample 1"),
                         std::runtime_error);
}

TEST_CASE("neuram_loss_grad: matches finite differences over the stacked parameters") {
    nn::Network e = nn::make_network({2, 3, 1}, 21);
    nn::Network d = nn::make_network({1, 3, 2}, 22, nn::OutputTransform::box_squash, Vec{-1, -1},
                                     Vec{1, 1});
    nn::Network s = nn::make_network({1, 2, 1}, 23);
    Rng rng(24);
    std::vector<Vec> xs;
    Vec q;
    for (int i = 0; i < 6; ++i) {
        xs.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
        q.push_back(rng.uniform(-1, 1));
    }

    std::size_t n_e = e.parameter_count(), n_d = d.parameter_count(), n_s = s.parameter_count();
    Vec grad(n_e + n_d + n_s, 0.0);
    double base = neuram_loss_grad(e, d, s, xs, q, grad);
    CHECK(base == doctest::Approx(neuram_loss(e, d, s, xs, q).total()).epsilon(1e-13));

    auto loss_at = [&](std::size_t idx, double delta) {
        nn::Network e2 = e, d2 = d, s2 = s;
        if (idx < n_e)
            e2.weights[idx] += delta;
        else if (idx < n_e + n_d)
            d2.weights[idx - n_e] += delta;
        else
            s2.weights[idx - n_e - n_d] += delta;
        return neuram_loss(e2, d2, s2, xs, q).total();
    };
    const double h = 1e-6;
    for (std::size_t idx = 0; idx < grad.size(); ++idx) {
        double fd = (loss_at(idx, h) - loss_at(idx, -h)) / (2.0 * h);
        CHECK(std::abs(grad[idx] - fd) <= std::max(1e-7, 1e-4 * std::abs(fd)));
    }
}

TEST_CASE("latent_interval: exact parabola encoder over a dense grid spans [0, 2]") {
    std::vector<Vec> grid;
    const int m = 200;
    for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j)
            grid.push_back({static_cast<double>(i) / m, static_cast<double>(j) / m});
    auto [lo, hi] = latent_interval(
        [](std::span<const double> x) { return x[0] * x[0] + x[1]; }, grid);
    CHECK(lo == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(hi == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("latent_interval: single sample and constant encoder give degenerate intervals") {
    std::vector<Vec> one{{0.5, 0.5}};
    auto [lo, hi] = latent_interval(
        [](std::span<const double> x) { return x[0] - x[1]; }, one);
    CHECK(lo == hi);

    std::vector<Vec> many{{0.1, 0.2}, {0.3, 0.4}, {0.9, 0.0}};
    auto [c_lo, c_hi] = latent_interval([](std::span<const double>) { return 3.25; }, many);
    CHECK(c_lo == 3.25);
    CHECK(c_hi == 3.25);
}

TEST_CASE("latent_interval: empty sample set is rejected") {
    std::vector<Vec> none;
    CHECK_THROWS_AS(latent_interval([](std::span<const double>) { return 0.0; }, none),
                    std::invalid_argument);
}

TEST_CASE("train_neuram: trained parabola artifact has small surrogate and reduction errors") {
    const NeurAMArtifact& art = trained_parabola();
    const ModelSpec& model = benchmark("parabola");
    auto test = sample_inputs(model.dist, 1000, 4242);
    ErrorStats err = reduction_errors(art, model, test);
    CHECK(err.mse_e2 < 1e-3);
    CHECK(err.mse_e1 < 1e-3);

    // surrogate pointwise error over random test points
    double mae = 0.0;
    for (int i = 0; i < 100; ++i) {
        mae += std::abs(surrogate_eval(art, test[i]) - model.eval(test[i]));
    }
    CHECK(mae / 100.0 < 0.05);
}

TEST_CASE("train_neuram: every training input encodes inside the latent interval") {
    const ModelSpec& model = benchmark("parabola");
    auto xs = sample_inputs(model.dist, 200, 77);
    NeurAMArtifact art = train_neuram(model, xs, fast_config(7, 500));
    for (const Vec& x : xs) {
        double t = art.encode_raw(x);
        CHECK(t >= art.t_min);
        CHECK(t <= art.t_max);
    }
}

TEST_CASE("train_neuram: near-constant-direction model projects points horizontally") {
    // q_lf varies almost only along x2: projections may move far in x1 while
    // the model value barely changes
    const ModelSpec& model = benchmark("q_lf");
    NeurAMArtifact art = train_neuram(model, 600, fast_config(3, 4000));
    auto test = sample_inputs(model.dist, 300, 55);
    ErrorStats err = reduction_errors(art, model, test);
    CHECK(err.mae_e1 < 0.05);

    double max_move = 0.0;
    for (const Vec& x : test) {
        Vec proj = art.project_raw(x);
        double dist = std::hypot(proj[0] - x[0], proj[1] - x[1]);
        max_move = std::max(max_move, dist);
    }
    CHECK(max_move > 0.3);
}

TEST_CASE("train_neuram: more data does not hurt (20-seed medians, sin-parabola)") {
    const ModelSpec& model = benchmark("sin_parabola");
    Vec mse_small, mse_large;
    for (int s = 0; s < 20; ++s) {
        auto test = sample_inputs(model.dist, 500, mix_seed(900 + s, 1));
        NeurAMArtifact small = train_neuram(model, 10, fast_config(900 + s, 2000));
        NeurAMArtifact large = train_neuram(model, 1000, fast_config(900 + s, 2000));
        mse_small.push_back(reduction_errors(small, model, test).mse_e2);
        mse_large.push_back(reduction_errors(large, model, test).mse_e2);
    }
    CHECK(median_of(mse_large) <= median_of(mse_small));
}

TEST_CASE("train_neuram: constant model is refused") {
    ModelSpec constant;
    constant.name = "constant";
    constant.dim = 2;
    constant.eval = [](std::span<const double>) { return 3.0; };
    constant.dist = {DistributionSpec::Kind::uniform_box, {0, 0}, {1, 1}};
    constant.domain_lo = {0, 0};
    constant.domain_hi = {1, 1};
    CHECK_THROWS_WITH_AS(train_neuram(constant, 50, fast_config(1, 10)),
                         doctest::Contains("constant model"), std::runtime_error);
}

TEST_CASE("train_neuram: non-finite evaluation is reported with its sample index") {
    ModelSpec bad;
    bad.name = "bad";
    bad.dim = 1;
    bad.eval = [](std::span<const double> x) { return x[0] > 0.5 ? 1.0 / 0.0 : x[0]; };
    bad.dist = {DistributionSpec::Kind::uniform_box, {0}, {1}};
    bad.domain_lo = {0};
    bad.domain_hi = {1};
    CHECK_THROWS_WITH_AS(train_neuram(bad, 50, fast_config(1, 10)),
                         doctest::Contains("non-finite"), std::runtime_error);
}

TEST_CASE("train_neuram: rejects fewer than two samples") {
    CHECK_THROWS_AS(train_neuram(benchmark("parabola"), 1, fast_config(0, 10)),
                    std::invalid_argument);
}

TEST_CASE("train_neuram: hyperparameter search selects by validation loss deterministically") {
    const ModelSpec& model = benchmark("parabola");
    TrainConfig config = fast_config(5, 300);
    config.search_trials = 3;
    NeurAMArtifact a = train_neuram(model, 100, config);
    NeurAMArtifact b = train_neuram(model, 100, config);
    CHECK(a.report.trials_run == 3);
    CHECK(std::isfinite(a.report.validation_loss));
    CHECK(a.report.encoder_arch.width == b.report.encoder_arch.width);
    CHECK(a.encoder.weights == b.encoder.weights);  // bit-reproducible
}

TEST_CASE("surrogate_eval: exact closed-form components at (0.5, 0.25) give 0.5") {
    const auto& red = *models::find_benchmark("parabola").exact_reduction;
    Vec x{0.5, 0.25};
    double t = red.pipeline.encode(x);
    CHECK(red.pipeline.surrogate(t) == 0.5);
}

TEST_CASE("surrogate_eval: refuses points outside the trained box") {
    const NeurAMArtifact& art = trained_parabola();
    CHECK_THROWS_WITH_AS(surrogate_eval(art, Vec{1.2, 0.5}), doctest::Contains("outside"),
                         std::runtime_error);
    CHECK_THROWS_AS(surrogate_eval(art, Vec{0.5}), std::invalid_argument);
}

TEST_CASE("surrogate_eval: invariant under the normalization round trip") {
    const NeurAMArtifact& art = trained_parabola();
    Rng rng(606);
    for (int i = 0; i < 200; ++i) {
        Vec x{rng.uniform(0, 1), rng.uniform(0, 1)};
        // snap onto the round-trip fixed point, then one more trip must be exact
        Vec snapped = art.in_norm.denormalize(art.in_norm.normalize(x));
        Vec again = art.in_norm.denormalize(art.in_norm.normalize(snapped));
        CHECK(surrogate_eval(art, again) == surrogate_eval(art, snapped));
    }
}

TEST_CASE("reduction_errors: exact parabola reduction has zero error") {
    const auto& entry = models::find_benchmark("parabola");
    auto test = sample_inputs(entry.spec.dist, 500, 8);
    ErrorStats err = reduction_errors(entry.exact_reduction->pipeline, entry.spec, test);
    CHECK(err.mae_e1 < 1e-15);
    CHECK(err.mse_e1 < 1e-30);
    CHECK(err.mae_e2 < 1e-15);
    CHECK(err.mse_e2 < 1e-30);
}

TEST_CASE("reduction_errors: perfect surrogate with collapsed decoder separates e1 from e2") {
    const ModelSpec& model = benchmark("parabola");
    ReducedPipeline pipeline;
    pipeline.encode = model.eval;
    pipeline.decode = [](double) { return Vec{0.5, 0.5}; };
    pipeline.surrogate = [](double t) { return t; };
    auto test = sample_inputs(model.dist, 400, 9);
    ErrorStats err = reduction_errors(pipeline, model, test);
    CHECK(err.mae_e2 == 0.0);
    CHECK(err.mae_e1 > 0.1);
}

TEST_CASE("reduction_errors: trained artifacts for q1, q2, q3 stay under 1e-2 MSE") {
    for (const char* name : {"q1", "q2", "q3"}) {
        const ModelSpec& model = benchmark(name);
        NeurAMArtifact art = train_neuram(model, 1000, fast_config(17));
        auto test = sample_inputs(model.dist, 1000, 18);
        ErrorStats err = reduction_errors(art, model, test);
        CAPTURE(name);
        CHECK(err.mse_e1 < 1e-2);
        CHECK(err.mse_e2 < 1e-2);
    }
}

TEST_CASE("reduction_errors: empty test set is rejected") {
    const auto& entry = models::find_benchmark("parabola");
    std::vector<Vec> empty;
    CHECK_THROWS_AS(reduction_errors(entry.exact_reduction->pipeline, entry.spec, empty),
                    std::invalid_argument);
}

TEST_CASE("idempotent projection: reconstruction term on fresh data stays near training level") {
    const NeurAMArtifact& art = trained_parabola();
    const ModelSpec& model = benchmark("parabola");
    auto fresh = sample_inputs(model.dist, 500, 31415);
    std::vector<Vec> xs_norm;
    Vec q_norm;
    for (const Vec& x : fresh) {
        xs_norm.push_back(art.in_norm.normalize(x));
        q_norm.push_back(art.out_norm.normalize(model.eval(x)));
    }
    LossTerms terms = neuram_loss(art.encoder, art.decoder, art.surrogate, xs_norm, q_norm);
    CHECK(terms.reconstruction <= 10.0 * std::max(art.report.loss_reconstruction, 1e-12));
}

TEST_CASE("artifact serialization: JSON round trip preserves evaluation exactly") {
    const ModelSpec& model = benchmark("parabola");
    NeurAMArtifact art = train_neuram(model, 100, fast_config(2, 300));
    NeurAMArtifact back = artifact_from_json_string(to_json_string(art));
    CHECK(back.encoder.weights == art.encoder.weights);
    CHECK(back.decoder.weights == art.decoder.weights);
    CHECK(back.surrogate.weights == art.surrogate.weights);
    CHECK(back.t_min == art.t_min);
    CHECK(back.t_max == art.t_max);
    Rng rng(12);
    for (int i = 0; i < 50; ++i) {
        Vec x{rng.uniform(0, 1), rng.uniform(0, 1)};
        CHECK(surrogate_eval(back, x) == surrogate_eval(art, x));
    }
    CHECK(back.report.n_samples == art.report.n_samples);
    CHECK(std::isnan(back.report.validation_loss));  // no search ran
}
