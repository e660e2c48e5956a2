#include "neuram/network.hpp"

#include <cmath>
#include <sstream>

namespace neuram::nn {

namespace {

// tanh(18) is the largest double below 1; clamping here keeps box-squash
// outputs strictly inside the box for arbitrarily large pre-activations.
constexpr double kSquashClamp = 18.0;

void check_dim(int expected, std::size_t got, const char* what) {
    if (static_cast<std::size_t>(expected) != got) {
        std::ostringstream os;
        os << "network: " << what << " dimension mismatch, expected " << expected << ", got " << got;
        throw std::invalid_argument(os.str());
    }
}

}  // namespace

std::size_t Network::parameter_count(std::span<const int> sizes) {
    std::size_t n = 0;
    for (std::size_t l = 1; l < sizes.size(); ++l)
        n += static_cast<std::size_t>(sizes[l]) * (sizes[l - 1] + 1);
    return n;
}

void Network::validate() const {
    if (layer_sizes.size() < 2) throw std::invalid_argument("network: need at least input and output layer");
    for (int s : layer_sizes)
        if (s <= 0) throw std::invalid_argument("network: layer sizes must be positive");
    if (weights.size() != parameter_count())
        throw std::invalid_argument("network: weight vector length does not match layer sizes");
    if (transform == OutputTransform::box_squash) {
        if (box_lo.size() != static_cast<std::size_t>(output_dim()) || box_hi.size() != box_lo.size())
            throw std::invalid_argument("network: box bounds must have one entry per output");
        for (std::size_t i = 0; i < box_lo.size(); ++i)
            if (!(box_lo[i] < box_hi[i])) throw std::invalid_argument("network: box requires lo < hi");
    }
}

Network make_network(std::vector<int> layer_sizes, std::uint64_t seed, OutputTransform transform,
                     Vec box_lo, Vec box_hi) {
    Network net;
    net.layer_sizes = std::move(layer_sizes);
    net.transform = transform;
    net.box_lo = std::move(box_lo);
    net.box_hi = std::move(box_hi);
    net.weights.assign(net.parameter_count(), 0.0);
    Rng rng(seed);
    std::size_t off = 0;
    for (int l = 1; l < static_cast<int>(net.layer_sizes.size()); ++l) {
        int n_in = net.layer_sizes[l - 1];
        int n_out = net.layer_sizes[l];
        double bound = std::sqrt(6.0 / (n_in + n_out));
        for (int i = 0; i < n_out * n_in; ++i) net.weights[off + i] = rng.uniform(-bound, bound);
        off += static_cast<std::size_t>(n_out) * n_in;
        off += n_out;  // biases stay zero
    }
    net.validate();
    return net;
}

Vec forward(const Network& net, std::span<const double> x, Tape* tape) {
    check_dim(net.input_dim(), x.size(), "input");
    int n_layers = net.num_layers();
    if (tape) {
        // resize only on shape change so repeated passes reuse the buffers
        if (tape->act.size() != static_cast<std::size_t>(n_layers) + 1) {
            tape->act.resize(n_layers + 1);
            tape->pre.resize(n_layers);
        }
        tape->act[0].assign(x.begin(), x.end());
    }
    Vec cur(x.begin(), x.end());
    Vec next;
    std::size_t off = 0;
    for (int l = 1; l <= n_layers; ++l) {
        int n_in = net.layer_sizes[l - 1];
        int n_out = net.layer_sizes[l];
        const double* w = net.weights.data() + off;
        const double* b = w + static_cast<std::size_t>(n_out) * n_in;
        next.assign(n_out, 0.0);
        for (int i = 0; i < n_out; ++i) {
            double z = b[i];
            const double* row = w + static_cast<std::size_t>(i) * n_in;
            for (int j = 0; j < n_in; ++j) z += row[j] * cur[j];
            next[i] = z;
        }
        if (tape) tape->pre[l - 1] = next;
        bool is_output = (l == n_layers);
        if (!is_output) {
            for (double& v : next) v = std::tanh(v);
        } else if (net.transform == OutputTransform::box_squash) {
            for (int i = 0; i < n_out; ++i) {
                double z = std::clamp(next[i], -kSquashClamp, kSquashClamp);
                double lo = net.box_lo[i], hi = net.box_hi[i];
                double y = lo + (hi - lo) * 0.5 * (std::tanh(z) + 1.0);
                next[i] = std::clamp(y, std::nextafter(lo, hi), std::nextafter(hi, lo));
            }
        }
        if (tape) tape->act[l] = next;
        cur.swap(next);
        off += static_cast<std::size_t>(n_out) * (n_in + 1);
    }
    return cur;
}

void backprop(const Network& net, const Tape& tape, std::span<const double> out_cot,
              std::span<double> x_cot, std::span<double> w_grad) {
    check_dim(net.output_dim(), out_cot.size(), "output cotangent");
    check_dim(net.input_dim(), x_cot.size(), "input cotangent");
    if (w_grad.size() != net.parameter_count())
        throw std::invalid_argument("network: gradient buffer length mismatch");

    int n_layers = net.num_layers();
    Vec delta(out_cot.begin(), out_cot.end());

    // output transform
    if (net.transform == OutputTransform::box_squash) {
        const Vec& z = tape.pre[n_layers - 1];
        for (int i = 0; i < net.output_dim(); ++i) {
            if (std::abs(z[i]) >= kSquashClamp) {
                delta[i] = 0.0;
            } else {
                double th = std::tanh(z[i]);
                delta[i] *= (net.box_hi[i] - net.box_lo[i]) * 0.5 * (1.0 - th * th);
            }
        }
    }

    // walk layers backwards; delta holds dL/d(pre-activation of layer l)
    std::size_t off = net.parameter_count();
    Vec prev_delta;
    for (int l = n_layers; l >= 1; --l) {
        int n_in = net.layer_sizes[l - 1];
        int n_out = net.layer_sizes[l];
        off -= static_cast<std::size_t>(n_out) * (n_in + 1);
        const double* w = net.weights.data() + off;
        double* gw = w_grad.data() + off;
        double* gb = gw + static_cast<std::size_t>(n_out) * n_in;
        const Vec& in_act = tape.act[l - 1];

        for (int i = 0; i < n_out; ++i) {
            double d = delta[i];
            gb[i] += d;
            double* grow = gw + static_cast<std::size_t>(i) * n_in;
            for (int j = 0; j < n_in; ++j) grow[j] += d * in_act[j];
        }
        prev_delta.assign(n_in, 0.0);
        for (int i = 0; i < n_out; ++i) {
            double d = delta[i];
            const double* row = w + static_cast<std::size_t>(i) * n_in;
            for (int j = 0; j < n_in; ++j) prev_delta[j] += d * row[j];
        }
        if (l > 1) {
            // through the tanh of the previous hidden layer
            const Vec& a = tape.act[l - 1];
            for (int j = 0; j < n_in; ++j) prev_delta[j] *= (1.0 - a[j] * a[j]);
        }
        delta.swap(prev_delta);
    }
    for (int j = 0; j < net.input_dim(); ++j) x_cot[j] = delta[j];
}

Jacobians grad(const Network& net, std::span<const double> x) {
    Tape tape;
    forward(net, x, &tape);
    int out_d = net.output_dim();
    int in_d = net.input_dim();
    std::size_t n_w = net.parameter_count();

    Jacobians jac;
    jac.d_out_d_x = Mat(out_d, in_d);
    jac.d_out_d_w = Mat(out_d, static_cast<int>(n_w));
    Vec cot(out_d, 0.0), x_cot(in_d, 0.0), w_row(n_w, 0.0);
    for (int k = 0; k < out_d; ++k) {
        std::fill(cot.begin(), cot.end(), 0.0);
        std::fill(w_row.begin(), w_row.end(), 0.0);
        cot[k] = 1.0;
        backprop(net, tape, cot, x_cot, w_row);
        for (int j = 0; j < in_d; ++j) jac.d_out_d_x(k, j) = x_cot[j];
        for (std::size_t j = 0; j < n_w; ++j) jac.d_out_d_w(k, static_cast<int>(j)) = w_row[j];
    }
    return jac;
}

}  // namespace neuram::nn
