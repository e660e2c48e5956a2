#pragma once

#include <span>
#include <string>
#include <vector>

#include "neuram/common.hpp"

namespace neuram::nn {

enum class OutputTransform {
    identity,
    box_squash,  // per-coordinate tanh squashed affinely into [lo_i, hi_i]
};

// Dense feed-forward network: tanh on hidden layers, identity or box-squash
// on the output layer. Weights live in one flat vector, per layer the
// row-major matrix W (n_out x n_in) followed by the bias b (n_out).
struct Network {
    std::vector<int> layer_sizes;  // input dim, hidden dims..., output dim
    Vec weights;
    OutputTransform transform = OutputTransform::identity;
    Vec box_lo, box_hi;  // used only with box_squash, one entry per output

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    int num_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }

    static std::size_t parameter_count(std::span<const int> sizes);
    std::size_t parameter_count() const { return parameter_count(layer_sizes); }

    // Throws std::invalid_argument when shapes or box bounds are inconsistent.
    void validate() const;
};

// Builds a network with Glorot-style uniform init, seeded.
Network make_network(std::vector<int> layer_sizes, std::uint64_t seed,
                     OutputTransform transform = OutputTransform::identity,
                     Vec box_lo = {}, Vec box_hi = {});

// Activations recorded by a forward pass, consumed by backprop.
struct Tape {
    std::vector<Vec> act;  // act[0] = x, act[l] = output of layer l (post-activation)
    std::vector<Vec> pre;  // pre[l-1] = pre-activation input of layer l
};

Vec forward(const Network& net, std::span<const double> x, Tape* tape = nullptr);

// Reverse pass for one input. out_cot is dL/dy; on return x_cot holds dL/dx
// and w_grad has dL/dw accumulated into it (caller zeroes when needed).
void backprop(const Network& net, const Tape& tape, std::span<const double> out_cot,
              std::span<double> x_cot, std::span<double> w_grad);

struct Jacobians {
    Mat d_out_d_x;  // output_dim x input_dim
    Mat d_out_d_w;  // output_dim x parameter_count
};

// Exact Jacobians via one reverse pass per output coordinate.
Jacobians grad(const Network& net, std::span<const double> x);

std::string to_json_string(const Network& net);
Network network_from_json_string(const std::string& text);

}  // namespace neuram::nn
