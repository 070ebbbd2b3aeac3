#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "coalsort/common.hpp"

namespace coalsort::nn {

struct AdamConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.001;

    void validate() const {
        require(learning_rate >= 0.0, ErrorKind::usage, "adam: learning_rate must be >= 0");
        require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorKind::usage,
                "adam: betas must be in [0,1)");
        require(epsilon > 0.0, ErrorKind::usage, "adam: epsilon must be > 0");
        require(weight_decay >= 0.0, ErrorKind::usage, "adam: weight_decay must be >= 0");
    }
};

struct AdamState {
    uint64_t step = 0;
    std::vector<double> m, v;

    explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Decoupled weight decay shrinks the parameter before the moment update, so
// decay never enters the moment estimates.
inline void adam_step(std::vector<double>& params, const std::vector<double>& grads,
                      AdamState& state, const AdamConfig& cfg) {
    cfg.validate();
    require(params.size() == grads.size() && params.size() == state.m.size() &&
                params.size() == state.v.size(),
            ErrorKind::usage, "adam_step: shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        params[i] -= cfg.learning_rate * cfg.weight_decay * params[i];
        double g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

}  // namespace coalsort::nn
