#pragma once

#include <functional>
#include <optional>
#include <span>

#include "neuram/common.hpp"
#include "neuram/diffmap.hpp"
#include "neuram/model_spec.hpp"
#include "neuram/neuram.hpp"

namespace neuram::sensitivity {

// Local importance of each input at latent position t: the squared components
// of the normalized surrogate gradient at the decoded point. Sums to one.
// Throws when t is outside the latent interval or the gradient is degenerate
// (squared norm below 1e-12).
Vec local_indices(const ManifoldView& manifold, double t);
Vec local_indices(const NeurAMArtifact& artifact, double t);

struct GlobalIndices {
    Vec theta;             // arc-length weighted averages, sum to 1
    int grid_size = 0;
    int skipped_points = 0;  // degenerate-gradient grid nodes that were skipped
};

GlobalIndices global_indices(const ManifoldView& manifold, int grid_size);
GlobalIndices global_indices(const NeurAMArtifact& artifact, int grid_size);

struct SobolIndices {
    Vec first_order;  // clipped to [0,1] for reporting
    Vec raw;          // unclipped estimates
};

// Pick-freeze first-order estimates from two N x d sample matrices.
SobolIndices sobol_first_order(const std::function<double(std::span<const double>)>& f,
                               const DistributionSpec& dist, int n, std::uint64_t seed);

// Full analysis record: local indices over a uniform latent grid, global
// indices, optional Sobol' comparison.
struct SensitivityResult {
    Vec t_grid;
    Mat local;  // rows follow t_grid, columns follow inputs
    Vec global;
    std::optional<Vec> sobol_first;
    int grid_size = 0;
    int skipped_points = 0;
};

SensitivityResult analyze(const ManifoldView& manifold, int grid_size);

}  // namespace neuram::sensitivity
