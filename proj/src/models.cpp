#include "neuram/models.hpp"

#include <cmath>

namespace neuram::models {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

ModelSpec make_spec(std::string name, int dim, DistributionSpec::Kind kind, Vec lo, Vec hi,
                    std::function<double(std::span<const double>)> eval) {
    ModelSpec spec;
    spec.name = std::move(name);
    spec.dim = dim;
    spec.dist.kind = kind;
    spec.dist.lo = lo;
    spec.dist.hi = hi;
    spec.domain_lo = std::move(lo);
    spec.domain_hi = std::move(hi);
    spec.eval = std::move(eval);
    return spec;
}

AnalyticReduction parabola_reduction() {
    // exact minimizer of the three-term loss for Q = x1^2 + x2 on [0,1]^2:
    // S(t) = t, E(x) = x1^2 + x2, D(t) = (sqrt(t/2), t/2), T = [0, 2]
    AnalyticReduction red;
    red.t_min = 0.0;
    red.t_max = 2.0;
    red.pipeline.encode = [](std::span<const double> x) { return x[0] * x[0] + x[1]; };
    red.pipeline.decode = [](double t) { return Vec{std::sqrt(0.5 * t), 0.5 * t}; };
    red.pipeline.surrogate = [](double t) { return t; };
    red.encoder = std::make_shared<AnalyticMap>(
        2, 1, [](std::span<const double> x) { return Vec{x[0] * x[0] + x[1]}; },
        [](std::span<const double> x) {
            Mat j(1, 2);
            j(0, 0) = 2.0 * x[0];
            j(0, 1) = 1.0;
            return j;
        });
    red.decoder = std::make_shared<AnalyticMap>(
        1, 2, [](std::span<const double> t) { return Vec{std::sqrt(0.5 * t[0]), 0.5 * t[0]}; },
        [](std::span<const double> t) {
            Mat j(2, 1);
            j(0, 0) = 1.0 / (2.0 * std::sqrt(2.0 * t[0]));  // +inf at t = 0
            j(1, 0) = 0.5;
            return j;
        });
    red.surrogate = std::make_shared<AnalyticMap>(
        1, 1, [](std::span<const double> t) { return Vec{t[0]}; },
        [](std::span<const double>) {
            Mat j(1, 1);
            j(0, 0) = 1.0;
            return j;
        });
    return red;
}

std::vector<BenchmarkEntry> build_registry() {
    std::vector<BenchmarkEntry> reg;

    {
        BenchmarkEntry e;
        e.spec = make_spec("parabola", 2, DistributionSpec::Kind::uniform_box, {0.0, 0.0},
                           {1.0, 1.0},
                           [](std::span<const double> x) { return x[0] * x[0] + x[1]; });
        e.input_names = {"x1", "x2"};
        e.exact_mean = ExactQuantity{1.0 / 3.0 + 0.5, "E[x1^2] + E[x2] over U([0,1]^2)"};
        double log_golden = std::log(2.0 + std::sqrt(5.0));
        e.exact_global_index_1 =
            ExactQuantity{(4.0 * std::sqrt(5.0) - 2.0 * log_golden) /
                              (4.0 * std::sqrt(5.0) + 2.0 * log_golden),
                          "(4*sqrt(5) - 2*log(2+sqrt(5))) / (4*sqrt(5) + 2*log(2+sqrt(5)))"};
        e.exact_reduction = parabola_reduction();
        reg.push_back(std::move(e));
    }
    {
        BenchmarkEntry e;
        e.spec = make_spec("sin_parabola", 2, DistributionSpec::Kind::uniform_box, {0.0, 0.0},
                           {1.0, 1.0},
                           [](std::span<const double> x) { return std::sin(x[0] * x[0] + x[1]); });
        e.input_names = {"x1", "x2"};
        e.exact_mean =
            ExactQuantity{0.67688947985498037, "high-resolution quadrature of the closed form"};
        e.exact_std =
            ExactQuantity{0.25818078138119541, "high-resolution quadrature of the closed form"};
        reg.push_back(std::move(e));
    }
    {
        BenchmarkEntry e;
        e.spec = make_spec("q1", 2, DistributionSpec::Kind::uniform_box, {-1.0, -1.0}, {1.0, 1.0},
                           [](std::span<const double> x) { return std::exp(x[1] - x[0] * x[0]); });
        e.input_names = {"x1", "x2"};
        reg.push_back(std::move(e));
    }
    {
        BenchmarkEntry e;
        e.spec = make_spec("q2", 2, DistributionSpec::Kind::uniform_box, {-1.0, -1.0}, {1.0, 1.0},
                           [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1]; });
        e.input_names = {"x1", "x2"};
        reg.push_back(std::move(e));
    }
    {
        BenchmarkEntry e;
        e.spec = make_spec("q3", 2, DistributionSpec::Kind::uniform_box, {-1.0, -1.0}, {1.0, 1.0},
                           [](std::span<const double> x) {
                               return x[0] * x[0] * x[0] + x[1] * x[1] * x[1] + 0.2 * x[0] +
                                      0.6 * x[1];
                           });
        e.input_names = {"x1", "x2"};
        reg.push_back(std::move(e));
    }
    {
        BenchmarkEntry e;
        e.spec = make_spec("q_hf", 2, DistributionSpec::Kind::uniform_box, {-1.0, -1.0},
                           {1.0, 1.0}, [](std::span<const double> x) {
                               return std::exp(0.7 * x[0] + 0.3 * x[1]) +
                                      0.15 * std::sin(kTwoPi * x[0]);
                           });
        e.input_names = {"x1", "x2"};
        e.exact_mean = ExactQuantity{
            25.0 / 21.0 * (std::exp(-1.0) - std::exp(-0.4) - std::exp(0.4) + std::exp(1.0)),
            "(25/21)(e^-1 - e^-2/5 - e^2/5 + e)"};
        reg.push_back(std::move(e));
    }
    {
        BenchmarkEntry e;
        e.spec = make_spec("q_lf", 2, DistributionSpec::Kind::uniform_box, {-1.0, -1.0},
                           {1.0, 1.0}, [](std::span<const double> x) {
                               return std::exp(0.01 * x[0] + 0.99 * x[1]) +
                                      0.15 * std::sin(1.5 * kTwoPi * x[1]);
                           });
        e.input_names = {"x1", "x2"};
        reg.push_back(std::move(e));
    }
    {
        BenchmarkEntry e;
        e.spec = make_spec("hartmann_u", 5, DistributionSpec::Kind::log_uniform,
                           {0.05, 1.0, 0.5, 0.5, 0.1}, {0.2, 5.0, 3.0, 3.0, 1.0}, hartmann_u);
        e.input_names = {"mu", "rho", "dp0_dx", "eta", "B0"};
        reg.push_back(std::move(e));
    }
    {
        BenchmarkEntry e;
        e.spec = make_spec("hartmann_b", 5, DistributionSpec::Kind::log_uniform,
                           {0.05, 1.0, 0.5, 0.5, 0.1}, {0.2, 5.0, 3.0, 3.0, 1.0}, hartmann_B);
        e.input_names = {"mu", "rho", "dp0_dx", "eta", "B0"};
        reg.push_back(std::move(e));
    }
    return reg;
}

const std::vector<BenchmarkEntry>& registry() {
    static const std::vector<BenchmarkEntry> reg = build_registry();
    return reg;
}

}  // namespace

double one_minus_z_coth_z(double z) {
    if (std::abs(z) < 1e-4) {
        double z2 = z * z;
        return -z2 / 3.0 + z2 * z2 / 45.0;
    }
    return 1.0 - z / std::tanh(z);
}

double one_minus_two_tanh_half_over_z(double z) {
    if (std::abs(z) < 1e-4) {
        double z2 = z * z;
        return z2 / 12.0 - z2 * z2 / 120.0;
    }
    return 1.0 - 2.0 * std::tanh(0.5 * z) / z;
}

double hartmann_u(std::span<const double> x) {
    // x = (mu, rho, dp0_dx, eta, B0), l = 1
    double mu = x[0], dp = x[2], eta = x[3], b0 = x[4];
    double z = b0 / std::sqrt(eta * mu);
    return -dp * (eta / (b0 * b0)) * one_minus_z_coth_z(z);
}

double hartmann_B(std::span<const double> x) {
    // magnetic constant mu0 = 1, l = 1
    double mu = x[0], dp = x[2], eta = x[3], b0 = x[4];
    double z = b0 / std::sqrt(eta * mu);
    return dp * (1.0 / (2.0 * b0)) * one_minus_two_tanh_half_over_z(z);
}

std::vector<std::string> benchmark_names() {
    std::vector<std::string> names;
    for (const auto& e : registry()) names.push_back(e.spec.name);
    return names;
}

const BenchmarkEntry& find_benchmark(const std::string& name) {
    for (const auto& e : registry())
        if (e.spec.name == name) return e;
    throw std::invalid_argument("unknown benchmark model '" + name + "'");
}

double eval_benchmark(const std::string& name, std::span<const double> x) {
    const BenchmarkEntry& entry = find_benchmark(name);
    if (static_cast<int>(x.size()) != entry.spec.dim)
        throw std::invalid_argument("eval_benchmark: input dimension mismatch for '" + name + "'");
    if (!entry.spec.in_domain(x))
        throw std::invalid_argument("eval_benchmark: input outside the domain of '" + name + "'");
    return entry.spec.eval(x);
}

const BenchmarkEntry& exact_quantities(const std::string& name) {
    const BenchmarkEntry& entry = find_benchmark(name);
    if (!entry.has_exact_quantities())
        throw std::invalid_argument("no exact quantities registered for '" + name + "'");
    return entry;
}

}  // namespace neuram::models
