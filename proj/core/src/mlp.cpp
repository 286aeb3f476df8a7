#include "pidcast/mlp.hpp"

#include "pidcast/errors.hpp"

#include <cmath>
#include <random>

namespace pidcast::mlp {

namespace {

struct Views {
    std::span<const double> w1, b1, w2, b2;
};

Views view(const Shape& s, std::span<const double> params) {
    const std::size_t n1 = static_cast<std::size_t>(s.hidden) * s.in;
    const std::size_t n2 = n1 + s.hidden;
    const std::size_t n3 = n2 + static_cast<std::size_t>(s.out) * s.hidden;
    return {params.subspan(0, n1), params.subspan(n1, s.hidden),
            params.subspan(n2, static_cast<std::size_t>(s.out) * s.hidden),
            params.subspan(n3, s.out)};
}

void check_sizes(const Shape& s, std::span<const double> params) {
    if (s.in < 1 || s.hidden < 1 || s.out < 1) {
        throw Error(ErrorCategory::validation, "mlp shape dimensions must be >= 1");
    }
    if (params.size() != s.param_count()) {
        throw Error(ErrorCategory::validation, "mlp parameter vector has wrong length");
    }
}

} // namespace

void forward(const Shape& shape, std::span<const double> params, std::span<const double> input,
             std::span<double> output) {
    check_sizes(shape, params);
    if (input.size() != static_cast<std::size_t>(shape.in) ||
        output.size() != static_cast<std::size_t>(shape.out)) {
        throw Error(ErrorCategory::validation, "mlp input/output size mismatch");
    }
    const auto v = view(shape, params);
    std::vector<double> hidden(static_cast<std::size_t>(shape.hidden));
    for (int h = 0; h < shape.hidden; ++h) {
        double acc = v.b1[h];
        const std::size_t row = static_cast<std::size_t>(h) * shape.in;
        for (int i = 0; i < shape.in; ++i) acc += v.w1[row + i] * input[i];
        hidden[h] = std::tanh(acc);
    }
    for (int o = 0; o < shape.out; ++o) {
        double acc = v.b2[o];
        const std::size_t row = static_cast<std::size_t>(o) * shape.hidden;
        for (int h = 0; h < shape.hidden; ++h) acc += v.w2[row + h] * hidden[h];
        output[o] = acc;
    }
}

double loss(const Shape& shape, std::span<const double> params,
            const std::vector<std::vector<double>>& inputs,
            const std::vector<std::vector<double>>& targets) {
    check_sizes(shape, params);
    if (inputs.empty() || inputs.size() != targets.size()) {
        throw Error(ErrorCategory::validation, "mlp loss: empty or mismatched sample sets");
    }
    std::vector<double> out(static_cast<std::size_t>(shape.out));
    double acc = 0.0;
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        forward(shape, params, inputs[s], out);
        for (int o = 0; o < shape.out; ++o) {
            const double d = out[o] - targets[s][o];
            acc += d * d;
        }
    }
    return acc / (static_cast<double>(inputs.size()) * shape.out);
}

double loss_and_gradient(const Shape& shape, std::span<const double> params,
                         const std::vector<std::vector<double>>& inputs,
                         const std::vector<std::vector<double>>& targets,
                         std::span<double> gradient) {
    check_sizes(shape, params);
    if (gradient.size() != shape.param_count()) {
        throw Error(ErrorCategory::validation, "mlp gradient vector has wrong length");
    }
    if (inputs.empty() || inputs.size() != targets.size()) {
        throw Error(ErrorCategory::validation, "mlp gradient: empty or mismatched sample sets");
    }
    const auto v = view(shape, params);
    std::fill(gradient.begin(), gradient.end(), 0.0);
    const std::size_t n1 = static_cast<std::size_t>(shape.hidden) * shape.in;
    const std::size_t n2 = n1 + shape.hidden;
    const std::size_t n3 = n2 + static_cast<std::size_t>(shape.out) * shape.hidden;
    auto g_w1 = gradient.subspan(0, n1);
    auto g_b1 = gradient.subspan(n1, shape.hidden);
    auto g_w2 = gradient.subspan(n2, static_cast<std::size_t>(shape.out) * shape.hidden);
    auto g_b2 = gradient.subspan(n3, shape.out);

    std::vector<double> pre(static_cast<std::size_t>(shape.hidden));
    std::vector<double> hid(static_cast<std::size_t>(shape.hidden));
    std::vector<double> out(static_cast<std::size_t>(shape.out));
    std::vector<double> delta_out(static_cast<std::size_t>(shape.out));
    std::vector<double> delta_hid(static_cast<std::size_t>(shape.hidden));
    const double norm = 2.0 / (static_cast<double>(inputs.size()) * shape.out);

    double acc = 0.0;
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        const auto& x = inputs[s];
        if (x.size() != static_cast<std::size_t>(shape.in) ||
            targets[s].size() != static_cast<std::size_t>(shape.out)) {
            throw Error(ErrorCategory::validation, "mlp sample has wrong shape");
        }
        for (int h = 0; h < shape.hidden; ++h) {
            double a = v.b1[h];
            const std::size_t row = static_cast<std::size_t>(h) * shape.in;
            for (int i = 0; i < shape.in; ++i) a += v.w1[row + i] * x[i];
            pre[h] = a;
            hid[h] = std::tanh(a);
        }
        for (int o = 0; o < shape.out; ++o) {
            double a = v.b2[o];
            const std::size_t row = static_cast<std::size_t>(o) * shape.hidden;
            for (int h = 0; h < shape.hidden; ++h) a += v.w2[row + h] * hid[h];
            out[o] = a;
            const double d = a - targets[s][o];
            acc += d * d;
            delta_out[o] = norm * d;
        }
        for (int h = 0; h < shape.hidden; ++h) {
            double back = 0.0;
            for (int o = 0; o < shape.out; ++o) {
                back += delta_out[o] * v.w2[static_cast<std::size_t>(o) * shape.hidden + h];
            }
            const double th = hid[h];
            delta_hid[h] = back * (1.0 - th * th);
        }
        for (int o = 0; o < shape.out; ++o) {
            const std::size_t row = static_cast<std::size_t>(o) * shape.hidden;
            for (int h = 0; h < shape.hidden; ++h) g_w2[row + h] += delta_out[o] * hid[h];
            g_b2[o] += delta_out[o];
        }
        for (int h = 0; h < shape.hidden; ++h) {
            const std::size_t row = static_cast<std::size_t>(h) * shape.in;
            for (int i = 0; i < shape.in; ++i) g_w1[row + i] += delta_hid[h] * x[i];
            g_b1[h] += delta_hid[h];
        }
    }
    return acc / (static_cast<double>(inputs.size()) * shape.out);
}

std::vector<double> init_params(const Shape& shape, std::uint32_t seed) {
    std::vector<double> params(shape.param_count());
    std::mt19937 rng(seed);
    const double r1 = 1.0 / std::sqrt(static_cast<double>(shape.in));
    const double r2 = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
    std::uniform_real_distribution<double> d1(-r1, r1);
    std::uniform_real_distribution<double> d2(-r2, r2);
    const std::size_t n1 = static_cast<std::size_t>(shape.hidden) * (shape.in + 1);
    for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] = i < n1 ? d1(rng) : d2(rng);
    }
    return params;
}

TrainResult train(const Shape& shape, std::vector<double>& params,
                  const std::vector<std::vector<double>>& inputs,
                  const std::vector<std::vector<double>>& targets, const TrainConfig& config) {
    check_sizes(shape, params);
    if (config.max_epochs < 1 || config.learning_rate <= 0.0) {
        throw Error(ErrorCategory::validation, "bad training config");
    }
    // Chronological tail is the early-stopping slice.
    const std::size_t n = inputs.size();
    std::size_t n_val = static_cast<std::size_t>(config.validation_fraction * static_cast<double>(n));
    if (n_val >= n) n_val = n - 1;
    const std::size_t n_fit = n - n_val;
    std::vector<std::vector<double>> fit_x(inputs.begin(), inputs.begin() + n_fit);
    std::vector<std::vector<double>> fit_y(targets.begin(), targets.begin() + n_fit);
    std::vector<std::vector<double>> val_x(inputs.begin() + n_fit, inputs.end());
    std::vector<std::vector<double>> val_y(targets.begin() + n_fit, targets.end());

    double lr = config.learning_rate;
    std::vector<double> grad(params.size());
    std::vector<double> trial(params.size());
    double current = loss_and_gradient(shape, params, fit_x, fit_y, grad);

    std::vector<double> best_params = params;
    double best_val = n_val > 0 ? loss(shape, params, val_x, val_y) : current;
    int stale = 0;
    int epochs = 0;
    TrainResult result;

    while (epochs < config.max_epochs) {
        for (std::size_t i = 0; i < params.size(); ++i) trial[i] = params[i] - lr * grad[i];
        const double trial_loss = loss(shape, trial, fit_x, fit_y);
        if (!std::isfinite(trial_loss) || trial_loss > current) {
            lr *= 0.5;
            if (lr < 1e-15) {
                result.notes = "learning rate underflow";
                break;
            }
            continue;
        }
        params.swap(trial);
        current = loss_and_gradient(shape, params, fit_x, fit_y, grad);
        lr *= 1.1; // regrow after accepted steps; rejections halve it back
        ++epochs;
        if (n_val > 0) {
            const double val = loss(shape, params, val_x, val_y);
            if (val < best_val) {
                best_val = val;
                best_params = params;
                stale = 0;
            } else if (++stale >= config.patience) {
                result.notes = "early stop on validation slice";
                break;
            }
        } else {
            best_params = params;
        }
    }

    if (!std::isfinite(current)) {
        throw Error(ErrorCategory::numeric, "training diverged: non-finite loss after " +
                                                std::to_string(epochs) + " epochs");
    }
    params = best_params;
    result.final_loss = loss(shape, params, fit_x, fit_y);
    result.epochs = epochs;
    return result;
}

} // namespace pidcast::mlp
