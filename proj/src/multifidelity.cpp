#include "neuram/multifidelity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace neuram::mf {

EmpiricalCdf::EmpiricalCdf(Vec values) : sorted_(std::move(values)) {
    if (sorted_.size() < 2) throw std::invalid_argument("ecdf: need at least 2 values");
    for (double v : sorted_)
        if (!std::isfinite(v)) throw std::invalid_argument("ecdf: non-finite value");
    std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::eval(double t) const {
    auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalCdf::inverse(double u) const {
    if (!(u >= 0.0 && u <= 1.0))
        throw std::invalid_argument("ecdf_inverse: u = " + format_g17(u) + " outside [0,1]");
    const long n = static_cast<long>(sorted_.size());
    long j = static_cast<long>(std::ceil(u * static_cast<double>(n)));
    j = std::clamp(j, 1L, n);
    // settle on the smallest rank whose CDF value (computed exactly as eval()
    // computes it) reaches u, so F(inverse(u)) >= u holds in floating point
    while (j > 1 && static_cast<double>(j - 1) / static_cast<double>(n) >= u) --j;
    while (j < n && static_cast<double>(j) / static_cast<double>(n) < u) ++j;
    return sorted_[j - 1];
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
    if (a.size() < 2) throw std::invalid_argument("pearson: need at least 2 samples");
    const double n = static_cast<double>(a.size());
    double mean_a = mean_of(a), mean_b = mean_of(b);
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double da = a[i] - mean_a, db = b[i] - mean_b;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    cov /= n - 1.0;
    var_a /= n - 1.0;
    var_b /= n - 1.0;
    if (!(var_a > 0.0) || !(var_b > 0.0))
        throw std::runtime_error("pearson: zero variance in one of the samples");
    return cov / std::sqrt(var_a * var_b);
}

MfmcPlan optimal_allocation(double budget, double cost_ratio, double rho) {
    if (!(cost_ratio > 0.0 && cost_ratio < 1.0))
        throw std::invalid_argument("optimal_allocation: cost ratio must be in (0,1)");
    if (!(std::abs(rho) < 1.0))
        throw std::invalid_argument("optimal_allocation: |rho| must be < 1 (gamma undefined)");
    MfmcPlan plan;
    plan.budget = budget;
    plan.cost_ratio = cost_ratio;
    plan.rho = rho;
    plan.gamma = std::sqrt(rho * rho / (cost_ratio * (1.0 - rho * rho)));

    if (plan.gamma <= 1.0) {
        // at or below break-even: all budget into the high-fidelity model
        plan.single_fidelity = true;
        plan.n_hf = static_cast<long>(std::floor(budget));
        plan.n_lf = 0;
        if (plan.n_hf < 2) throw std::invalid_argument("optimal_allocation: budget too small");
        return plan;
    }
    plan.n_hf = static_cast<long>(std::floor(budget / (1.0 + cost_ratio * plan.gamma)));
    if (plan.n_hf < 2) throw std::invalid_argument("optimal_allocation: budget too small");
    plan.n_lf = static_cast<long>(std::floor(plan.gamma * static_cast<double>(plan.n_hf)));
    while (plan.n_lf > plan.n_hf &&
           static_cast<double>(plan.n_hf) + cost_ratio * static_cast<double>(plan.n_lf) > budget)
        --plan.n_lf;
    return plan;
}

double estimator_variance(double budget, double cost_ratio, double rho, double var_hf) {
    if (!(budget > 0.0)) throw std::invalid_argument("estimator_variance: budget must be positive");
    if (!(cost_ratio > 0.0 && cost_ratio < 1.0))
        throw std::invalid_argument("estimator_variance: cost ratio must be in (0,1)");
    if (!(std::abs(rho) <= 1.0)) throw std::invalid_argument("estimator_variance: |rho| > 1");
    if (!(var_hf >= 0.0)) throw std::invalid_argument("estimator_variance: negative variance");
    double r2 = rho * rho;
    double factor = std::sqrt(1.0 - r2) + std::sqrt(cost_ratio * r2);
    return var_hf / budget * factor * factor;
}

MfmcEstimate mfmc_estimate(const ModelSpec& hf,
                           const std::function<double(std::span<const double>)>& lf,
                           const MfmcPlan& plan, std::uint64_t seed) {
    if (plan.n_hf < 1) throw std::invalid_argument("mfmc_estimate: invalid plan");
    const long n_draw = plan.single_fidelity ? plan.n_hf : plan.n_lf;
    auto xs = sample_inputs(hf.dist, static_cast<int>(n_draw), seed);

    Vec hf_vals(plan.n_hf);
    for (long i = 0; i < plan.n_hf; ++i) {
        hf_vals[i] = hf.eval(xs[i]);
        if (!std::isfinite(hf_vals[i]))
            throw std::runtime_error("mfmc_estimate: non-finite high-fidelity value at sample " +
                                     std::to_string(i));
    }
    double mean_hf = mean_of(hf_vals);

    MfmcEstimate est;
    est.n_hf = plan.n_hf;
    est.n_lf = plan.single_fidelity ? 0 : plan.n_lf;
    est.rho_used = plan.rho;
    est.beta_cv_used = plan.single_fidelity ? 0.0 : plan.beta_cv;
    est.variance_formula = estimator_variance(plan.budget, plan.cost_ratio,
                                              plan.single_fidelity ? 0.0 : plan.rho,
                                              variance_of(hf_vals));

    if (plan.single_fidelity || plan.beta_cv == 0.0) {
        est.q_hat = mean_hf;
    } else {
        double sum_lf_shared = 0.0, sum_lf_all = 0.0;
        for (long i = 0; i < plan.n_lf; ++i) {
            double v = lf(xs[i]);
            if (!std::isfinite(v))
                throw std::runtime_error(
                    "mfmc_estimate: non-finite low-fidelity value at sample " + std::to_string(i));
            sum_lf_all += v;
            if (i < plan.n_hf) sum_lf_shared += v;
        }
        double mean_lf_shared = sum_lf_shared / static_cast<double>(plan.n_hf);
        double mean_lf_all = sum_lf_all / static_cast<double>(plan.n_lf);
        est.q_hat = mean_hf - plan.beta_cv * (mean_lf_shared - mean_lf_all);
    }
    return est;
}

double modified_lf(std::span<const double> x, const NeurAMArtifact& hf_artifact,
                   const NeurAMArtifact& lf_artifact, const EmpiricalCdf& f_hf,
                   const EmpiricalCdf& f_lf, const ModelSpec& lf_model) {
    if (!hf_artifact.in_norm.contains(x))
        throw std::runtime_error("modified_lf: input outside the high-fidelity domain box");
    double t_hf = hf_artifact.encode_raw(x);
    double u = f_hf.eval(t_hf);
    double t_lf = f_lf.inverse(u);
    Vec z = nn::forward(lf_artifact.decoder, std::span<const double>(&t_lf, 1));
    Vec x_lf = lf_artifact.in_norm.denormalize(z);
    if (!lf_model.in_domain(x_lf))
        throw std::runtime_error("modified_lf: decoded point outside the low-fidelity domain");
    return lf_model.eval(x_lf);
}

double ideal_correlation(std::span<const double> hf_values, std::span<const double> lf_values) {
    double rho = pearson(hf_values, lf_values);  // also validates inputs
    Vec hf(hf_values.begin(), hf_values.end());
    Vec lf(lf_values.begin(), lf_values.end());
    std::sort(hf.begin(), hf.end());
    std::sort(lf.begin(), lf.end());
    if (rho < 0.0) std::reverse(lf.begin(), lf.end());
    return pearson(hf, lf);
}

TheoryReport verify_idealized_theory(std::span<const double> hf_values,
                                     std::span<const double> lf_values) {
    if (hf_values.size() != lf_values.size())
        throw std::invalid_argument("verify_idealized_theory: length mismatch");
    const std::size_t n = hf_values.size();

    TheoryReport report;
    report.rho = pearson(hf_values, lf_values);

    EmpiricalCdf f_hf(Vec(hf_values.begin(), hf_values.end()));
    EmpiricalCdf f_lf(Vec(lf_values.begin(), lf_values.end()));
    // the rank map below targets the ascending (comonotone) coupling, so the
    // reference here is always its correlation, whatever the pilot's sign
    report.rho_ideal = pearson(f_hf.sorted_values(), f_lf.sorted_values());
    for (std::size_t i = 1; i < n; ++i) {
        if (f_hf.sorted_values()[i] == f_hf.sorted_values()[i - 1]) ++report.tie_count;
        if (f_lf.sorted_values()[i] == f_lf.sorted_values()[i - 1]) ++report.tie_count;
    }

    // rank map through the shared uniform space (the idealized modified model)
    Vec modified(n);
    for (std::size_t i = 0; i < n; ++i) modified[i] = f_lf.inverse(f_hf.eval(hf_values[i]));
    report.rho_modified = pearson(hf_values, modified);

    // moments computed over sorted copies: identical multisets give bitwise
    // identical sums, which is the exactness the idealized result predicts
    Vec mod_sorted = modified;
    std::sort(mod_sorted.begin(), mod_sorted.end());
    const Vec& lf_sorted = f_lf.sorted_values();
    report.is_permutation = std::equal(mod_sorted.begin(), mod_sorted.end(), lf_sorted.begin());
    report.mean_preserved = mean_of(mod_sorted) == mean_of(lf_sorted);
    report.var_preserved = variance_of(mod_sorted) == variance_of(lf_sorted);

    double eps_tie = report.tie_count == 0
                         ? 0.0
                         : 2.0 * static_cast<double>(report.tie_count) / static_cast<double>(n);
    report.corr_improved = report.rho_modified >= report.rho - eps_tie;
    return report;
}

}  // namespace neuram::mf
