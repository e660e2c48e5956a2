#pragma once

#include <functional>
#include <memory>
#include <span>

#include "neuram/common.hpp"
#include "neuram/network.hpp"

namespace neuram {

// A differentiable vector map. Sensitivity analysis works against this
// interface so it runs identically on trained networks and on closed-form
// encoder/decoder/surrogate triples.
class DiffMap {
public:
    virtual ~DiffMap() = default;
    virtual int in_dim() const = 0;
    virtual int out_dim() const = 0;
    virtual Vec value(std::span<const double> x) const = 0;
    virtual Mat jacobian(std::span<const double> x) const = 0;  // out_dim x in_dim
};

class NetworkMap final : public DiffMap {
public:
    explicit NetworkMap(nn::Network net) : net_(std::move(net)) {}
    int in_dim() const override { return net_.input_dim(); }
    int out_dim() const override { return net_.output_dim(); }
    Vec value(std::span<const double> x) const override { return nn::forward(net_, x); }
    Mat jacobian(std::span<const double> x) const override { return nn::grad(net_, x).d_out_d_x; }

private:
    nn::Network net_;
};

class AnalyticMap final : public DiffMap {
public:
    using ValueFn = std::function<Vec(std::span<const double>)>;
    using JacFn = std::function<Mat(std::span<const double>)>;

    AnalyticMap(int in_dim, int out_dim, ValueFn value, JacFn jac)
        : in_(in_dim), out_(out_dim), value_(std::move(value)), jac_(std::move(jac)) {}

    int in_dim() const override { return in_; }
    int out_dim() const override { return out_; }
    Vec value(std::span<const double> x) const override { return value_(x); }
    Mat jacobian(std::span<const double> x) const override { return jac_(x); }

private:
    int in_, out_;
    ValueFn value_;
    JacFn jac_;
};

// Encoder/decoder/surrogate triple plus the latent interval: everything the
// downstream analyses need to know about a one-dimensional reduction.
class ManifoldView {
public:
    ManifoldView(std::shared_ptr<const DiffMap> encoder, std::shared_ptr<const DiffMap> decoder,
                 std::shared_ptr<const DiffMap> surrogate, double t_min, double t_max)
        : enc_(std::move(encoder)), dec_(std::move(decoder)), sur_(std::move(surrogate)),
          t_min_(t_min), t_max_(t_max) {
        if (!(t_min_ <= t_max_)) throw std::invalid_argument("manifold: latent interval inverted");
    }

    const DiffMap& encoder() const { return *enc_; }
    const DiffMap& decoder() const { return *dec_; }
    const DiffMap& surrogate() const { return *sur_; }
    double t_min() const { return t_min_; }
    double t_max() const { return t_max_; }
    int dim() const { return enc_->in_dim(); }

private:
    std::shared_ptr<const DiffMap> enc_, dec_, sur_;
    double t_min_, t_max_;
};

}  // namespace neuram
