#include "neuram/sensitivity.hpp"

#include <cmath>
#include <sstream>

namespace neuram::sensitivity {

namespace {

constexpr double kDegenerateNorm = 1e-12;

// Gradient of the latent surrogate composed with the encoder at the decoded
// point D(t): S'(E(D(t))) * dE/dx(D(t)). Returns false when degenerate.
bool surrogate_gradient_at(const ManifoldView& m, double t, Vec& grad_out) {
    Vec x = m.decoder().value(std::span<const double>(&t, 1));
    Vec t_enc = m.encoder().value(x);
    Mat j_enc = m.encoder().jacobian(x);
    Mat j_sur = m.surrogate().jacobian(t_enc);
    double s_prime = j_sur(0, 0);
    int d = m.dim();
    grad_out.assign(d, 0.0);
    double norm2 = 0.0;
    for (int i = 0; i < d; ++i) {
        grad_out[i] = s_prime * j_enc(0, i);
        norm2 += grad_out[i] * grad_out[i];
    }
    return std::isfinite(norm2) && norm2 >= kDegenerateNorm;
}

Vec theta_from_gradient(const Vec& grad) {
    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    Vec theta(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) theta[i] = grad[i] * grad[i] / norm2;
    return theta;
}

}  // namespace

Vec local_indices(const ManifoldView& manifold, double t) {
    if (t < manifold.t_min() || t > manifold.t_max()) {
        std::ostringstream os;
        os << "local_indices: t=" << t << " outside the latent interval [" << manifold.t_min()
           << ", " << manifold.t_max() << "]";
        throw std::invalid_argument(os.str());
    }
    Vec grad;
    if (!surrogate_gradient_at(manifold, t, grad)) {
        std::ostringstream os;
        os << "local_indices: degenerate gradient at t=" << t;
        throw std::runtime_error(os.str());
    }
    return theta_from_gradient(grad);
}

Vec local_indices(const NeurAMArtifact& artifact, double t) {
    return local_indices(manifold_view(artifact), t);
}

GlobalIndices global_indices(const ManifoldView& manifold, int grid_size) {
    SensitivityResult full = analyze(manifold, grid_size);
    return GlobalIndices{full.global, full.grid_size, full.skipped_points};
}

GlobalIndices global_indices(const NeurAMArtifact& artifact, int grid_size) {
    return global_indices(manifold_view(artifact), grid_size);
}

SensitivityResult analyze(const ManifoldView& manifold, int grid_size) {
    if (grid_size < 2) throw std::invalid_argument("global_indices: grid_size must be >= 2");
    if (!(manifold.t_min() < manifold.t_max()))
        throw std::invalid_argument("global_indices: degenerate latent interval");

    const int d = manifold.dim();
    const double h = (manifold.t_max() - manifold.t_min()) / (grid_size - 1);

    SensitivityResult result;
    result.grid_size = grid_size;
    result.t_grid.resize(grid_size);
    result.local = Mat(grid_size, d);

    std::vector<Vec> decoded(grid_size);
    std::vector<char> valid(grid_size, 0);
    Vec grad;
    for (int k = 0; k < grid_size; ++k) {
        double t = manifold.t_min() + h * k;
        if (k == grid_size - 1) t = manifold.t_max();
        result.t_grid[k] = t;
        decoded[k] = manifold.decoder().value(std::span<const double>(&t, 1));
        if (surrogate_gradient_at(manifold, t, grad)) {
            Vec theta = theta_from_gradient(grad);
            for (int i = 0; i < d; ++i) result.local(k, i) = theta[i];
            valid[k] = 1;
        } else {
            for (int i = 0; i < d; ++i) result.local(k, i) = std::numeric_limits<double>::quiet_NaN();
            ++result.skipped_points;
        }
    }
    if (result.skipped_points * 10 > grid_size) {
        std::ostringstream os;
        os << "global_indices: " << result.skipped_points << " of " << grid_size
           << " grid points have a degenerate surrogate gradient";
        throw std::runtime_error(os.str());
    }

    // Trapezoid against arc length. The arc element over each cell comes from
    // the decoder chord; unlike the nodal Jacobian norm it stays finite when
    // |D'| blows up at an interval endpoint (integrable singularity).
    Vec numerator(d, 0.0);
    double denominator = 0.0;
    for (int k = 0; k + 1 < grid_size; ++k) {
        double chord = 0.0;
        for (int i = 0; i < d; ++i) {
            double diff = decoded[k + 1][i] - decoded[k][i];
            chord += diff * diff;
        }
        chord = std::sqrt(chord);
        if (!std::isfinite(chord)) continue;
        if (!valid[k] && !valid[k + 1]) continue;
        denominator += chord;
        for (int i = 0; i < d; ++i) {
            double avg;
            if (valid[k] && valid[k + 1])
                avg = 0.5 * (result.local(k, i) + result.local(k + 1, i));
            else
                avg = valid[k] ? result.local(k, i) : result.local(k + 1, i);
            numerator[i] += chord * avg;
        }
    }
    if (!(denominator > 0.0))
        throw std::runtime_error("global_indices: manifold has zero arc length over the grid");

    result.global.resize(d);
    for (int i = 0; i < d; ++i) result.global[i] = numerator[i] / denominator;
    return result;
}

SobolIndices sobol_first_order(const std::function<double(std::span<const double>)>& f,
                               const DistributionSpec& dist, int n, std::uint64_t seed) {
    if (n < 100) throw std::invalid_argument("sobol_first_order: need n >= 100");
    const int d = dist.dim();
    auto a = sample_inputs(dist, n, mix_seed(seed, 0x50B01));
    auto b = sample_inputs(dist, n, mix_seed(seed, 0x50B02));

    Vec f_a(n), f_b(n);
    for (int j = 0; j < n; ++j) {
        f_a[j] = f(a[j]);
        f_b[j] = f(b[j]);
    }
    Vec pooled;
    pooled.reserve(2 * n);
    pooled.insert(pooled.end(), f_a.begin(), f_a.end());
    pooled.insert(pooled.end(), f_b.begin(), f_b.end());
    double var = variance_of(pooled);
    if (!(var > 0.0)) throw std::runtime_error("sobol_first_order: zero output variance");

    SobolIndices result;
    result.raw.resize(d);
    result.first_order.resize(d);
    Vec x(d);
    for (int i = 0; i < d; ++i) {
        // A with column i taken from B
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            x = a[j];
            x[i] = b[j][i];
            double f_abi = f(x);
            acc += f_b[j] * (f_abi - f_a[j]);
        }
        result.raw[i] = acc / static_cast<double>(n) / var;
        result.first_order[i] = std::clamp(result.raw[i], 0.0, 1.0);
    }
    return result;
}

}  // namespace neuram::sensitivity
