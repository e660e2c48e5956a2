#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neuram/common.hpp"
#include "neuram/diffmap.hpp"
#include "neuram/model_spec.hpp"
#include "neuram/network.hpp"

namespace neuram {

// Per-coordinate affine map of raw inputs onto [-1,1]^d; coordinates flagged
// log_scale are mapped through log first (log-uniform inputs).
struct InputNormalizer {
    std::vector<std::uint8_t> log_scale;
    Vec lo, hi;  // raw bounds

    int dim() const { return static_cast<int>(lo.size()); }
    Vec normalize(std::span<const double> raw) const;
    Vec denormalize(std::span<const double> z) const;
    bool contains(std::span<const double> raw) const;

    static InputNormalizer identity(int d);
};

struct OutputNormalizer {
    double lo = -1.0, hi = 1.0;

    double normalize(double q) const { return (q - 0.5 * (lo + hi)) / half_range(); }
    double denormalize(double z) const { return 0.5 * (lo + hi) + half_range() * z; }
    double half_range() const { return 0.5 * (hi - lo); }
};

struct Arch {
    int hidden_layers = 2;
    int width = 8;
};

struct TrainConfig {
    int epochs = 10000;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    // Random-search budget over per-network depth/width. 0 trains the fixed
    // architectures below directly.
    int search_trials = 30;
    Arch encoder_arch{2, 8};
    Arch decoder_arch{2, 8};
    Arch surrogate_arch{2, 8};
    double validation_fraction = 0.2;
    int search_layers_min = 1, search_layers_max = 4;
    int search_width_min = 1, search_width_max = 16;
};

struct TrainingReport {
    double loss_total = 0.0;
    double loss_surrogate_manifold = 0.0;  // Q vs S(E(D(E(x))))
    double loss_surrogate_direct = 0.0;    // Q vs S(E(x))
    double loss_reconstruction = 0.0;      // D(E(x)) vs D(E(D(E(x))))
    int n_samples = 0;
    std::uint64_t seed = 0;
    Arch encoder_arch, decoder_arch, surrogate_arch;
    double validation_loss = std::numeric_limits<double>::quiet_NaN();
    int trials_run = 0;
};

// Trained reduction: encoder (d->1), decoder (1->d, squashed into the
// normalized box), latent surrogate (1->1), the latent interval and the
// normalization maps. Networks operate in normalized coordinates.
struct NeurAMArtifact {
    std::string model_name;
    nn::Network encoder;    // d -> 1
    nn::Network decoder;    // 1 -> d, box-squashed to [-1,1]^d
    nn::Network surrogate;  // 1 -> 1
    double t_min = 0.0, t_max = 0.0;
    InputNormalizer in_norm;
    OutputNormalizer out_norm;
    TrainingReport report;

    double encode_raw(std::span<const double> x) const;
    Vec project_raw(std::span<const double> x) const;  // denormalize(D(E(normalize(x))))
};

struct LossTerms {
    double surrogate_manifold = 0.0;
    double surrogate_direct = 0.0;
    double reconstruction = 0.0;
    double total() const { return surrogate_manifold + surrogate_direct + reconstruction; }
};

// Three-term loss over a batch, generic in the encoder/decoder/surrogate so
// closed-form triples evaluate through the same code path as networks.
// encode: span<const double> -> double, decode: double -> Vec,
// surrogate: double -> double.
template <class EncFn, class DecFn, class SurFn>
    requires std::invocable<EncFn, std::span<const double>> && std::invocable<DecFn, double> &&
             std::invocable<SurFn, double>
LossTerms neuram_loss(EncFn&& encode, DecFn&& decode, SurFn&& surrogate,
                      std::span<const Vec> xs, std::span<const double> q) {
    if (xs.empty() || xs.size() != q.size())
        throw std::invalid_argument("neuram_loss: batch empty or x/q length mismatch");
    LossTerms terms;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(q[i])) {
            throw std::runtime_error("neuram_loss: non-finite model value at sample " + std::to_string(i));
        }
        double t1 = encode(std::span<const double>(xs[i]));
        Vec y = decode(t1);
        double t2 = encode(std::span<const double>(y));
        Vec z = decode(t2);
        double s1 = surrogate(t1);
        double s2 = surrogate(t2);
        terms.surrogate_manifold += (q[i] - s2) * (q[i] - s2);
        terms.surrogate_direct += (q[i] - s1) * (q[i] - s1);
        double rec = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) rec += (y[j] - z[j]) * (y[j] - z[j]);
        terms.reconstruction += rec;
    }
    terms.surrogate_manifold /= n;
    terms.surrogate_direct /= n;
    terms.reconstruction /= n;
    return terms;
}

LossTerms neuram_loss(const nn::Network& encoder, const nn::Network& decoder,
                      const nn::Network& surrogate, std::span<const Vec> xs,
                      std::span<const double> q);

// Loss and gradient w.r.t. the stacked parameter vector [encoder|decoder|
// surrogate], used by training and exposed for gradient tests.
double neuram_loss_grad(const nn::Network& encoder, const nn::Network& decoder,
                        const nn::Network& surrogate, std::span<const Vec> xs,
                        std::span<const double> q, std::span<double> grad);

// Min/max of the encoder over a sample set.
template <class EncFn>
    requires std::invocable<EncFn, std::span<const double>>
std::pair<double, double> latent_interval(EncFn&& encode, std::span<const Vec> samples) {
    if (samples.empty()) throw std::invalid_argument("latent_interval: empty sample set");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Vec& x : samples) {
        double t = encode(std::span<const double>(x));
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }
    return {lo, hi};
}

std::pair<double, double> latent_interval(const nn::Network& encoder, std::span<const Vec> samples);

NeurAMArtifact train_neuram(const ModelSpec& model, int n, const TrainConfig& config);

// Same training on caller-provided realizations (the shared-pilot case in the
// multifidelity pipeline, where both fidelities see identical inputs).
NeurAMArtifact train_neuram(const ModelSpec& model, std::span<const Vec> xs_raw,
                            const TrainConfig& config);

// De-normalized S(E(normalize(x))). Throws when x lies outside the box the
// artifact was trained on.
double surrogate_eval(const NeurAMArtifact& artifact, std::span<const double> x);

struct ErrorStats {
    double mae_e1 = 0.0, mse_e1 = 0.0;  // reduction error, true model at projected points
    double mae_e2 = 0.0, mse_e2 = 0.0;  // surrogate error
};

// Eval-only reduction pipeline in raw coordinates; lets closed-form triples
// run through the same error metrics as trained artifacts.
struct ReducedPipeline {
    std::function<double(std::span<const double>)> encode;
    std::function<Vec(double)> decode;       // raw coordinates
    std::function<double(double)> surrogate; // raw output units
};

ReducedPipeline raw_pipeline(const NeurAMArtifact& artifact);

ErrorStats reduction_errors(const ReducedPipeline& pipeline, const ModelSpec& model,
                            std::span<const Vec> test);
ErrorStats reduction_errors(const NeurAMArtifact& artifact, const ModelSpec& model,
                            std::span<const Vec> test);

// Normalized-coordinate view of the trained triple for sensitivity analysis.
ManifoldView manifold_view(const NeurAMArtifact& artifact);

std::string to_json_string(const NeurAMArtifact& artifact);
NeurAMArtifact artifact_from_json_string(const std::string& text);
void save_artifact(const NeurAMArtifact& artifact, const std::string& path);
NeurAMArtifact load_artifact(const std::string& path);

// Deterministic derived seeds for sub-streams (sampling, init, trials).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace neuram
