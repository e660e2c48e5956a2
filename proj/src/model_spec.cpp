#include "neuram/model_spec.hpp"

#include <cmath>
#include <sstream>

namespace neuram {

void DistributionSpec::validate() const {
    if (lo.empty() || lo.size() != hi.size())
        throw std::invalid_argument("distribution: bounds must be non-empty and equal length");
    for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!(lo[i] < hi[i])) {
            std::ostringstream os;
            os << "distribution: bounds invalid at coordinate " << i << " (need lo < hi)";
            throw std::invalid_argument(os.str());
        }
        if (kind == Kind::log_uniform && !(lo[i] > 0.0)) {
            std::ostringstream os;
            os << "distribution: log-uniform requires positive lower bound at coordinate " << i;
            throw std::invalid_argument(os.str());
        }
    }
}

bool ModelSpec::in_domain(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim) return false;
    for (int i = 0; i < dim; ++i)
        if (x[i] < domain_lo[i] || x[i] > domain_hi[i]) return false;
    return true;
}

std::vector<Vec> sample_inputs(const DistributionSpec& dist, int n, std::uint64_t seed) {
    dist.validate();
    if (n < 1) throw std::invalid_argument("sample_inputs: need n >= 1");
    Rng rng(seed);
    int d = dist.dim();
    std::vector<Vec> samples(n, Vec(d, 0.0));
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < d; ++i) {
            if (dist.kind == DistributionSpec::Kind::uniform_box) {
                samples[k][i] = rng.uniform(dist.lo[i], dist.hi[i]);
            } else {
                samples[k][i] = std::exp(rng.uniform(std::log(dist.lo[i]), std::log(dist.hi[i])));
            }
        }
    }
    return samples;
}

}  // namespace neuram
