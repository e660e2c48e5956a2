#pragma once

#include <optional>
#include <string>
#include <vector>

#include "neuram/diffmap.hpp"
#include "neuram/model_spec.hpp"
#include "neuram/neuram.hpp"

namespace neuram::models {

struct ExactQuantity {
    double value = 0.0;
    std::string provenance;
};

// Closed-form encoder/decoder/surrogate triple attached to a benchmark,
// usable both as an eval-only pipeline and as differentiable maps.
struct AnalyticReduction {
    ReducedPipeline pipeline;
    std::shared_ptr<const DiffMap> encoder, decoder, surrogate;
    double t_min = 0.0, t_max = 0.0;

    ManifoldView view() const { return ManifoldView(encoder, decoder, surrogate, t_min, t_max); }
};

struct BenchmarkEntry {
    ModelSpec spec;
    std::vector<std::string> input_names;
    std::optional<ExactQuantity> exact_mean;
    std::optional<ExactQuantity> exact_std;
    std::optional<ExactQuantity> exact_global_index_1;  // first-input global index
    std::optional<AnalyticReduction> exact_reduction;

    bool has_exact_quantities() const {
        return exact_mean || exact_std || exact_global_index_1;
    }
};

std::vector<std::string> benchmark_names();
const BenchmarkEntry& find_benchmark(const std::string& name);  // throws on unknown name

// Checked dispatch: unknown name or x outside the domain box throw.
double eval_benchmark(const std::string& name, std::span<const double> x);

// Registered closed-form reference values; throws when the entry has none.
const BenchmarkEntry& exact_quantities(const std::string& name);

// Hartmann closed forms over (mu, rho, dp0_dx, eta, B0); the density rho is
// accepted and ignored, it does not enter either expression.
double hartmann_u(std::span<const double> x);
double hartmann_B(std::span<const double> x);

// 1 - z*coth(z), series-guarded near z = 0 (removable singularity)
double one_minus_z_coth_z(double z);
// 1 - (2/z)*tanh(z/2), series-guarded near z = 0
double one_minus_two_tanh_half_over_z(double z);

}  // namespace neuram::models
