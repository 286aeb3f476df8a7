#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pidcast::mlp {

/// One hidden layer, tanh activation, linear output.
/// Parameter layout (row-major): W1[hidden x in], b1[hidden],
/// W2[out x hidden], b2[out].
struct Shape {
    int in = 0;
    int hidden = 0;
    int out = 0;

    std::size_t param_count() const {
        return static_cast<std::size_t>(in + 1) * hidden +
               static_cast<std::size_t>(hidden + 1) * out;
    }
};

struct TrainConfig {
    int max_epochs = 2000;
    double learning_rate = 0.05;
    int patience = 50;              // accepted epochs without validation improvement
    double validation_fraction = 0.2;
    std::uint32_t seed = 1;
};

struct TrainResult {
    double final_loss = 0.0; // training MSE at the returned parameters
    int epochs = 0;          // accepted descent steps
    std::string notes;
};

void forward(const Shape& shape, std::span<const double> params,
             std::span<const double> input, std::span<double> output);

/// Mean squared error over all samples and output components.
double loss(const Shape& shape, std::span<const double> params,
            const std::vector<std::vector<double>>& inputs,
            const std::vector<std::vector<double>>& targets);

/// Loss plus its full analytic gradient at `params`.
double loss_and_gradient(const Shape& shape, std::span<const double> params,
                         const std::vector<std::vector<double>>& inputs,
                         const std::vector<std::vector<double>>& targets,
                         std::span<double> gradient);

std::vector<double> init_params(const Shape& shape, std::uint32_t seed);

/// Full-batch gradient descent. A step that increases the training loss is
/// rejected and the learning rate halved, so the accepted-loss sequence is
/// non-increasing. The chronological tail of the samples serves as the
/// early-stopping slice; the best parameters seen on it are returned.
/// Throws Error{numeric} when the loss is non-finite after max_epochs.
TrainResult train(const Shape& shape, std::vector<double>& params,
                  const std::vector<std::vector<double>>& inputs,
                  const std::vector<std::vector<double>>& targets,
                  const TrainConfig& config);

} // namespace pidcast::mlp
