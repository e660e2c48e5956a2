#include "neuram/optimizer.hpp"

#include <cmath>
#include <sstream>

namespace neuram::nn {

void AdamState::update(std::span<double> params, std::span<const double> grad) {
    if (params.size() != m.size() || grad.size() != m.size())
        throw std::invalid_argument("adam: parameter/gradient length does not match state");
    ++step;
    double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t i = 0; i < m.size(); ++i) {
        double g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        double m_hat = m[i] / bc1;
        double v_hat = v[i] / bc2;
        params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

FitResult fit(const std::function<double(std::span<const double>, std::span<double>)>& loss_grad,
              Vec init, const FitConfig& config) {
    Vec params = std::move(init);
    Vec grad(params.size(), 0.0);
    AdamState adam(params.size(), config.learning_rate);
    adam.beta1 = config.beta1;
    adam.beta2 = config.beta2;
    adam.epsilon = config.epsilon;

    FitResult result;
    result.weights = params;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss = loss_grad(params, grad);
        if (!std::isfinite(loss)) {
            std::ostringstream os;
            os << "fit: non-finite loss at epoch " << epoch;
            throw std::runtime_error(os.str());
        }
        for (double g : grad) {
            if (!std::isfinite(g)) {
                std::ostringstream os;
                os << "fit: non-finite gradient at epoch " << epoch;
                throw std::runtime_error(os.str());
            }
        }
        if (epoch == 0) {
            result.initial_loss = loss;
            result.final_loss = loss;
        }
        if (loss <= result.final_loss) {
            result.final_loss = loss;
            result.weights = params;
        }
        adam.update(params, grad);
        result.epochs_run = epoch + 1;
    }
    return result;
}

}  // namespace neuram::nn
