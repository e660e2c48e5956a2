#include "neuram/neuram.hpp"

#include <cmath>
#include <sstream>

#include "neuram/optimizer.hpp"

namespace neuram {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

Vec InputNormalizer::normalize(std::span<const double> raw) const {
    if (static_cast<int>(raw.size()) != dim())
        throw std::invalid_argument("normalizer: input dimension mismatch");
    Vec z(dim());
    for (int i = 0; i < dim(); ++i) {
        double u = log_scale[i] ? std::log(raw[i]) : raw[i];
        double a = log_scale[i] ? std::log(lo[i]) : lo[i];
        double b = log_scale[i] ? std::log(hi[i]) : hi[i];
        z[i] = (u - 0.5 * (a + b)) / (0.5 * (b - a));
    }
    return z;
}

Vec InputNormalizer::denormalize(std::span<const double> z) const {
    if (static_cast<int>(z.size()) != dim())
        throw std::invalid_argument("normalizer: input dimension mismatch");
    Vec raw(dim());
    for (int i = 0; i < dim(); ++i) {
        double a = log_scale[i] ? std::log(lo[i]) : lo[i];
        double b = log_scale[i] ? std::log(hi[i]) : hi[i];
        double u = 0.5 * (a + b) + 0.5 * (b - a) * z[i];
        double x = log_scale[i] ? std::exp(u) : u;
        // |z| <= 1 maps into the box; clamp removes rounding excursions
        raw[i] = std::clamp(x, lo[i], hi[i]);
    }
    return raw;
}

bool InputNormalizer::contains(std::span<const double> raw) const {
    if (static_cast<int>(raw.size()) != dim()) return false;
    for (int i = 0; i < dim(); ++i)
        if (raw[i] < lo[i] || raw[i] > hi[i]) return false;
    return true;
}

InputNormalizer InputNormalizer::identity(int d) {
    InputNormalizer norm;
    norm.log_scale.assign(d, 0);
    norm.lo.assign(d, -1.0);
    norm.hi.assign(d, 1.0);
    return norm;
}

double NeurAMArtifact::encode_raw(std::span<const double> x) const {
    Vec z = in_norm.normalize(x);
    return nn::forward(encoder, z)[0];
}

Vec NeurAMArtifact::project_raw(std::span<const double> x) const {
    Vec z = in_norm.normalize(x);
    Vec t = nn::forward(encoder, z);
    Vec y = nn::forward(decoder, t);
    return in_norm.denormalize(y);
}

LossTerms neuram_loss(const nn::Network& encoder, const nn::Network& decoder,
                      const nn::Network& surrogate, std::span<const Vec> xs,
                      std::span<const double> q) {
    return neuram_loss(
        [&](std::span<const double> x) { return nn::forward(encoder, x)[0]; },
        [&](double t) { return nn::forward(decoder, std::span<const double>(&t, 1)); },
        [&](double t) { return nn::forward(surrogate, std::span<const double>(&t, 1))[0]; },
        xs, q);
}

double neuram_loss_grad(const nn::Network& encoder, const nn::Network& decoder,
                        const nn::Network& surrogate, std::span<const Vec> xs,
                        std::span<const double> q, std::span<double> grad) {
    if (xs.empty() || xs.size() != q.size())
        throw std::invalid_argument("neuram_loss_grad: batch empty or x/q length mismatch");
    const std::size_t n_e = encoder.parameter_count();
    const std::size_t n_d = decoder.parameter_count();
    const std::size_t n_s = surrogate.parameter_count();
    if (grad.size() != n_e + n_d + n_s)
        throw std::invalid_argument("neuram_loss_grad: gradient buffer length mismatch");
    std::fill(grad.begin(), grad.end(), 0.0);
    auto g_enc = grad.subspan(0, n_e);
    auto g_dec = grad.subspan(n_e, n_d);
    auto g_sur = grad.subspan(n_e + n_d, n_s);

    const int d = encoder.input_dim();
    nn::Tape t_e1, t_d1, t_e2, t_d2, t_s1, t_s2;
    Vec x_cot(d), bar_z(d), bar_y(d);
    double one_cot[1];
    double loss = 0.0;

    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(q[i]))
            throw std::runtime_error("neuram_loss_grad: non-finite model value at sample " +
                                     std::to_string(i));
        const Vec& x = xs[i];
        double t1 = nn::forward(encoder, x, &t_e1)[0];
        Vec y = nn::forward(decoder, std::span<const double>(&t1, 1), &t_d1);
        double t2 = nn::forward(encoder, y, &t_e2)[0];
        Vec z = nn::forward(decoder, std::span<const double>(&t2, 1), &t_d2);
        double s1 = nn::forward(surrogate, std::span<const double>(&t1, 1), &t_s1)[0];
        double s2 = nn::forward(surrogate, std::span<const double>(&t2, 1), &t_s2)[0];

        loss += (q[i] - s2) * (q[i] - s2) + (q[i] - s1) * (q[i] - s1);
        for (int j = 0; j < d; ++j) loss += (y[j] - z[j]) * (y[j] - z[j]);

        // reverse pass, deepest application first
        double bar_s2 = 2.0 * (s2 - q[i]);
        double bar_s1 = 2.0 * (s1 - q[i]);
        for (int j = 0; j < d; ++j) bar_z[j] = 2.0 * (z[j] - y[j]);

        double bar_t2 = 0.0;
        nn::backprop(surrogate, t_s2, std::span<const double>(&bar_s2, 1),
                     std::span<double>(one_cot, 1), g_sur);
        bar_t2 += one_cot[0];
        nn::backprop(decoder, t_d2, bar_z, std::span<double>(one_cot, 1), g_dec);
        bar_t2 += one_cot[0];

        nn::backprop(encoder, t_e2, std::span<const double>(&bar_t2, 1), x_cot, g_enc);
        for (int j = 0; j < d; ++j) bar_y[j] = x_cot[j] + 2.0 * (y[j] - z[j]);

        double bar_t1 = 0.0;
        nn::backprop(surrogate, t_s1, std::span<const double>(&bar_s1, 1),
                     std::span<double>(one_cot, 1), g_sur);
        bar_t1 += one_cot[0];
        nn::backprop(decoder, t_d1, bar_y, std::span<double>(one_cot, 1), g_dec);
        bar_t1 += one_cot[0];
        nn::backprop(encoder, t_e1, std::span<const double>(&bar_t1, 1), x_cot, g_enc);
    }

    const double inv_n = 1.0 / static_cast<double>(xs.size());
    for (double& g : grad) g *= inv_n;
    return loss * inv_n;
}

std::pair<double, double> latent_interval(const nn::Network& encoder, std::span<const Vec> samples) {
    return latent_interval([&](std::span<const double> x) { return nn::forward(encoder, x)[0]; },
                           samples);
}

namespace {

struct Triple {
    nn::Network encoder, decoder, surrogate;
};

std::vector<int> layer_sizes_for(int in, const Arch& arch, int out) {
    std::vector<int> sizes;
    sizes.push_back(in);
    for (int l = 0; l < arch.hidden_layers; ++l) sizes.push_back(arch.width);
    sizes.push_back(out);
    return sizes;
}

Triple build_triple(int d, const Arch& ae, const Arch& ad, const Arch& as, std::uint64_t seed) {
    Triple nets;
    nets.encoder = nn::make_network(layer_sizes_for(d, ae, 1), mix_seed(seed, 1));
    nets.decoder = nn::make_network(layer_sizes_for(1, ad, d), mix_seed(seed, 2),
                                    nn::OutputTransform::box_squash, Vec(d, -1.0), Vec(d, 1.0));
    nets.surrogate = nn::make_network(layer_sizes_for(1, as, 1), mix_seed(seed, 3));
    return nets;
}

Vec stack_weights(const Triple& nets) {
    Vec w;
    w.reserve(nets.encoder.weights.size() + nets.decoder.weights.size() +
              nets.surrogate.weights.size());
    w.insert(w.end(), nets.encoder.weights.begin(), nets.encoder.weights.end());
    w.insert(w.end(), nets.decoder.weights.begin(), nets.decoder.weights.end());
    w.insert(w.end(), nets.surrogate.weights.begin(), nets.surrogate.weights.end());
    return w;
}

void unstack_weights(std::span<const double> w, Triple& nets) {
    std::size_t n_e = nets.encoder.parameter_count();
    std::size_t n_d = nets.decoder.parameter_count();
    std::size_t n_s = nets.surrogate.parameter_count();
    nets.encoder.weights.assign(w.begin(), w.begin() + n_e);
    nets.decoder.weights.assign(w.begin() + n_e, w.begin() + n_e + n_d);
    nets.surrogate.weights.assign(w.begin() + n_e + n_d, w.begin() + n_e + n_d + n_s);
}

// Trains one triple on the given normalized batch, returns the best weights.
Triple fit_triple(int d, const Arch& ae, const Arch& ad, const Arch& as, std::uint64_t init_seed,
                  std::span<const Vec> xs, std::span<const double> q, const TrainConfig& config) {
    Triple nets = build_triple(d, ae, ad, as, init_seed);
    nn::FitConfig fit_config;
    fit_config.epochs = config.epochs;
    fit_config.learning_rate = config.learning_rate;
    auto loss_grad = [&](std::span<const double> w, std::span<double> g) {
        unstack_weights(w, nets);
        return neuram_loss_grad(nets.encoder, nets.decoder, nets.surrogate, xs, q, g);
    };
    nn::FitResult result = nn::fit(loss_grad, stack_weights(nets), fit_config);
    unstack_weights(result.weights, nets);
    return nets;
}

// Flips the sign of the latent coordinate: E -> -E, D(t) -> D(-t),
// S(t) -> S(-t). The loss is invariant under this gauge, but downstream
// shared-space rank maps need a fixed orientation.
void flip_latent_sign(Triple& nets) {
    // negate the encoder's output layer (weights and bias)
    {
        nn::Network& e = nets.encoder;
        int n_layers = e.num_layers();
        std::size_t last = static_cast<std::size_t>(e.layer_sizes[n_layers]) *
                           (e.layer_sizes[n_layers - 1] + 1);
        for (std::size_t i = e.parameter_count() - last; i < e.parameter_count(); ++i)
            e.weights[i] = -e.weights[i];
    }
    // negate the first-layer weights (not biases) of decoder and surrogate
    for (nn::Network* net : {&nets.decoder, &nets.surrogate}) {
        std::size_t first = static_cast<std::size_t>(net->layer_sizes[1]) * net->layer_sizes[0];
        for (std::size_t i = 0; i < first; ++i) net->weights[i] = -net->weights[i];
    }
}

}  // namespace

NeurAMArtifact train_neuram(const ModelSpec& model, int n, const TrainConfig& config) {
    if (n < 2) throw std::invalid_argument("train_neuram: need at least 2 samples");
    auto xs_raw = sample_inputs(model.dist, n, mix_seed(config.seed, 0xA0));
    return train_neuram(model, xs_raw, config);
}

NeurAMArtifact train_neuram(const ModelSpec& model, std::span<const Vec> xs_raw,
                            const TrainConfig& config) {
    const int n = static_cast<int>(xs_raw.size());
    if (n < 2) throw std::invalid_argument("train_neuram: need at least 2 samples");
    if (!model.eval) throw std::invalid_argument("train_neuram: model has no evaluation function");

    Vec q_raw(n);
    for (int i = 0; i < n; ++i) {
        q_raw[i] = model.eval(xs_raw[i]);
        if (!std::isfinite(q_raw[i]))
            throw std::runtime_error("train_neuram: non-finite model evaluation at sample " +
                                     std::to_string(i));
    }
    auto [q_lo, q_hi] = std::minmax_element(q_raw.begin(), q_raw.end());
    if (!(*q_lo < *q_hi))
        throw std::runtime_error("train_neuram: constant model (zero output variance over " +
                                 std::to_string(n) + " samples)");

    NeurAMArtifact artifact;
    artifact.model_name = model.name;
    artifact.in_norm.log_scale.assign(model.dim,
                                      model.dist.kind == DistributionSpec::Kind::log_uniform ? 1 : 0);
    artifact.in_norm.lo = model.domain_lo;
    artifact.in_norm.hi = model.domain_hi;
    artifact.out_norm = OutputNormalizer{*q_lo, *q_hi};

    std::vector<Vec> xs(n);
    Vec q(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = artifact.in_norm.normalize(xs_raw[i]);
        q[i] = artifact.out_norm.normalize(q_raw[i]);
    }

    Arch best_e = config.encoder_arch, best_d = config.decoder_arch, best_s = config.surrogate_arch;
    double best_val = std::numeric_limits<double>::quiet_NaN();
    int trials_run = 0;

    if (config.search_trials > 0) {
        // deterministic split: shuffled indices, last fifth held out
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) order[i] = i;
        Rng split_rng(mix_seed(config.seed, 0xB0));
        split_rng.shuffle(order);
        int n_val = static_cast<int>(std::floor(config.validation_fraction * n));
        int n_train = n - n_val;
        std::vector<Vec> xs_train, xs_val;
        Vec q_train, q_val;
        for (int i = 0; i < n_train; ++i) {
            xs_train.push_back(xs[order[i]]);
            q_train.push_back(q[order[i]]);
        }
        for (int i = n_train; i < n; ++i) {
            xs_val.push_back(xs[order[i]]);
            q_val.push_back(q[order[i]]);
        }
        bool have_val = n_val >= 1;

        Rng search_rng(mix_seed(config.seed, 0xC0));
        auto draw_arch = [&]() {
            Arch a;
            a.hidden_layers = config.search_layers_min +
                              static_cast<int>(search_rng.below(
                                  config.search_layers_max - config.search_layers_min + 1));
            a.width = config.search_width_min +
                      static_cast<int>(search_rng.below(
                          config.search_width_max - config.search_width_min + 1));
            return a;
        };
        for (int trial = 0; trial < config.search_trials; ++trial) {
            Arch ae = draw_arch(), ad = draw_arch(), as = draw_arch();
            Triple nets = fit_triple(model.dim, ae, ad, as, mix_seed(config.seed, 0xD0 + trial),
                                     xs_train, q_train, config);
            LossTerms val = have_val
                ? neuram_loss(nets.encoder, nets.decoder, nets.surrogate, xs_val, q_val)
                : neuram_loss(nets.encoder, nets.decoder, nets.surrogate, xs_train, q_train);
            ++trials_run;
            // strict improvement keeps the lowest trial index on ties
            bool better = std::isfinite(val.total()) &&
                          (!std::isfinite(best_val) || val.total() < best_val);
            if (better) {
                best_val = val.total();
                best_e = ae;
                best_d = ad;
                best_s = as;
            }
        }
    }

    Triple nets = fit_triple(model.dim, best_e, best_d, best_s, mix_seed(config.seed, 0xE0), xs, q,
                             config);

    // Pin the latent orientation: t ascending with the model output over the
    // training sample, matching the exact-minimizer convention E = Q. The
    // trained sign is otherwise arbitrary, and cross-fidelity rank maps
    // require both latents oriented the same way.
    {
        Vec latents(n);
        for (int i = 0; i < n; ++i) latents[i] = nn::forward(nets.encoder, xs[i])[0];
        double mean_t = mean_of(latents);
        double mean_q = mean_of(q);
        double cov = 0.0;
        for (int i = 0; i < n; ++i) cov += (latents[i] - mean_t) * (q[i] - mean_q);
        if (cov < 0.0) flip_latent_sign(nets);
    }

    artifact.encoder = std::move(nets.encoder);
    artifact.decoder = std::move(nets.decoder);
    artifact.surrogate = std::move(nets.surrogate);

    auto interval = latent_interval(artifact.encoder, xs);
    artifact.t_min = interval.first;
    artifact.t_max = interval.second;

    LossTerms final_terms = neuram_loss(artifact.encoder, artifact.decoder, artifact.surrogate, xs, q);
    artifact.report.loss_total = final_terms.total();
    artifact.report.loss_surrogate_manifold = final_terms.surrogate_manifold;
    artifact.report.loss_surrogate_direct = final_terms.surrogate_direct;
    artifact.report.loss_reconstruction = final_terms.reconstruction;
    artifact.report.n_samples = n;
    artifact.report.seed = config.seed;
    artifact.report.encoder_arch = best_e;
    artifact.report.decoder_arch = best_d;
    artifact.report.surrogate_arch = best_s;
    artifact.report.validation_loss = best_val;
    artifact.report.trials_run = trials_run;
    return artifact;
}

double surrogate_eval(const NeurAMArtifact& artifact, std::span<const double> x) {
    if (static_cast<int>(x.size()) != artifact.in_norm.dim())
        throw std::invalid_argument("surrogate_eval: input dimension mismatch");
    if (!artifact.in_norm.contains(x))
        throw std::runtime_error("surrogate_eval: input outside the trained domain box");
    Vec z = artifact.in_norm.normalize(x);
    Vec t = nn::forward(artifact.encoder, z);
    Vec s = nn::forward(artifact.surrogate, t);
    return artifact.out_norm.denormalize(s[0]);
}

ReducedPipeline raw_pipeline(const NeurAMArtifact& artifact) {
    auto art = std::make_shared<NeurAMArtifact>(artifact);
    ReducedPipeline p;
    p.encode = [art](std::span<const double> x) { return art->encode_raw(x); };
    p.decode = [art](double t) {
        Vec y = nn::forward(art->decoder, std::span<const double>(&t, 1));
        return art->in_norm.denormalize(y);
    };
    p.surrogate = [art](double t) {
        double s = nn::forward(art->surrogate, std::span<const double>(&t, 1))[0];
        return art->out_norm.denormalize(s);
    };
    return p;
}

ErrorStats reduction_errors(const ReducedPipeline& pipeline, const ModelSpec& model,
                            std::span<const Vec> test) {
    if (test.empty()) throw std::invalid_argument("reduction_errors: empty test set");
    ErrorStats stats;
    for (std::size_t i = 0; i < test.size(); ++i) {
        double qx = model.eval(test[i]);
        double t = pipeline.encode(test[i]);
        Vec projected = pipeline.decode(t);
        if (!model.in_domain(projected))
            throw std::runtime_error(
                "reduction_errors: projected point outside the model domain at sample " +
                std::to_string(i) + " (decoder box constraint violated)");
        double e1 = qx - model.eval(projected);
        double e2 = qx - pipeline.surrogate(t);
        stats.mae_e1 += std::abs(e1);
        stats.mse_e1 += e1 * e1;
        stats.mae_e2 += std::abs(e2);
        stats.mse_e2 += e2 * e2;
    }
    double inv_n = 1.0 / static_cast<double>(test.size());
    stats.mae_e1 *= inv_n;
    stats.mse_e1 *= inv_n;
    stats.mae_e2 *= inv_n;
    stats.mse_e2 *= inv_n;
    return stats;
}

ErrorStats reduction_errors(const NeurAMArtifact& artifact, const ModelSpec& model,
                            std::span<const Vec> test) {
    return reduction_errors(raw_pipeline(artifact), model, test);
}

ManifoldView manifold_view(const NeurAMArtifact& artifact) {
    return ManifoldView(std::make_shared<NetworkMap>(artifact.encoder),
                        std::make_shared<NetworkMap>(artifact.decoder),
                        std::make_shared<NetworkMap>(artifact.surrogate), artifact.t_min,
                        artifact.t_max);
}

}  // namespace neuram
