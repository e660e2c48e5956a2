#pragma once

#include <functional>
#include <span>

#include "neuram/common.hpp"

namespace neuram::nn {

// Adam first-moment/second-moment state. One instance per parameter vector.
struct AdamState {
    Vec m, v;
    long step = 0;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(std::size_t n_params, double lr = 1e-3)
        : m(n_params, 0.0), v(n_params, 0.0), learning_rate(lr) {}

    void update(std::span<double> params, std::span<const double> grad);
};

struct FitConfig {
    int epochs = 10000;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct FitResult {
    Vec weights;         // best-loss parameters seen during the run
    double initial_loss = 0.0;
    double final_loss = 0.0;  // loss of the returned weights
    int epochs_run = 0;
};

// Full-batch first-order minimization of an arbitrary differentiable loss.
// loss_grad evaluates the loss at w and writes dL/dw into grad (pre-zeroed).
// Tracks the best parameters so the result never regresses past the init.
// Throws std::runtime_error naming the epoch on non-finite loss or gradient.
FitResult fit(const std::function<double(std::span<const double>, std::span<double>)>& loss_grad,
              Vec init, const FitConfig& config);

}  // namespace neuram::nn
