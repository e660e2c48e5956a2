#pragma once

#include <functional>
#include <span>

#include "neuram/common.hpp"
#include "neuram/model_spec.hpp"
#include "neuram/neuram.hpp"

namespace neuram::mf {

// Empirical CDF over latent pilot values with the generalized inverse
// (inverse transform onto the shared uniform space).
class EmpiricalCdf {
public:
    explicit EmpiricalCdf(Vec values);  // sorts; needs at least 2 values

    // F(t) = #{values <= t} / n, right-continuous
    double eval(double t) const;
    // ceil(u*n)-th order statistic; u = 0 gives the smallest value
    double inverse(double u) const;

    std::size_t size() const { return sorted_.size(); }
    const Vec& sorted_values() const { return sorted_; }

private:
    Vec sorted_;
};

struct MfmcPlan {
    double budget = 0.0;      // in high-fidelity evaluation units
    double cost_ratio = 0.0;  // w = C_LF / C_HF
    double rho = 0.0;         // pilot correlation, signed
    double gamma = 0.0;
    long n_hf = 0;
    long n_lf = 0;
    double beta_cv = 0.0;  // control-variate coefficient
    bool sign_flip = false;
    bool single_fidelity = false;  // allocation degenerated to plain MC
};

// Optimal budget split for a two-fidelity estimator. Degenerates to a flagged
// single-fidelity plan when the correlation gives no advantage (gamma <= 1,
// which includes rho = 0). Throws on |rho| >= 1 or a budget too small for two
// high-fidelity evaluations.
MfmcPlan optimal_allocation(double budget, double cost_ratio, double rho);

// Var[q_hat] = (var_hf / B) * (sqrt(1 - rho^2) + sqrt(w rho^2))^2
double estimator_variance(double budget, double cost_ratio, double rho, double var_hf);

double pearson(std::span<const double> a, std::span<const double> b);

struct MfmcEstimate {
    double q_hat = 0.0;
    double variance_formula = 0.0;
    long n_hf = 0;
    long n_lf = 0;
    double rho_used = 0.0;
    double beta_cv_used = 0.0;
};

// Two-fidelity control-variate estimate. Draws n_lf inputs from the
// high-fidelity input distribution; the first n_hf are shared between the two
// low-fidelity sums. beta_cv comes from the plan (pilot-estimated).
MfmcEstimate mfmc_estimate(const ModelSpec& hf,
                           const std::function<double(std::span<const double>)>& lf,
                           const MfmcPlan& plan, std::uint64_t seed);

// Low-fidelity model re-sampled through the shared uniform space:
// Q_LF(D_LF(F_LF^-1(F_HF(E_HF(x))))). Both CDFs must come from the same pilot
// sample's encoded values. When the pilot correlation was negative the caller
// builds the whole pipeline from the negated LF model.
double modified_lf(std::span<const double> x, const NeurAMArtifact& hf_artifact,
                   const NeurAMArtifact& lf_artifact, const EmpiricalCdf& f_hf,
                   const EmpiricalCdf& f_lf, const ModelSpec& lf_model);

// Correlation of the comonotone coupling of the two pilot samples: the ceiling
// the shared-space construction can reach under exact reconstruction. The LF
// list is coupled in descending order when the pilot correlation is negative.
double ideal_correlation(std::span<const double> hf_values, std::span<const double> lf_values);

struct TheoryReport {
    bool mean_preserved = false;
    bool var_preserved = false;
    bool corr_improved = false;
    bool is_permutation = false;
    double rho = 0.0;           // pilot correlation
    double rho_modified = 0.0;  // correlation after the rank map
    double rho_ideal = 0.0;
    int tie_count = 0;  // preservation is exact only for tie-free pilots
};

// Empirical check of the idealized-setting results: rank-maps the LF pilot
// through the shared space and verifies that mean/variance are untouched and
// the correlation with the HF pilot did not decrease.
TheoryReport verify_idealized_theory(std::span<const double> hf_values,
                                     std::span<const double> lf_values);

}  // namespace neuram::mf
