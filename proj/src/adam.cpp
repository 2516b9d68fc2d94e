#include "l2c/adam.hpp"

#include <cmath>

#include "l2c/errors.hpp"

namespace l2c {

void adam_step(ParameterStore& params, AdamState& state, double lr) {
    if (!(lr > 0.0)) {
        throw ConfigError("adam: learning rate must be positive");
    }
    for (const auto& [name, p] : params.parameters()) {
        if (!p.has_grad()) {
            throw TapeError("adam: parameter '" + name + "' has no gradient");
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (auto& [name, p] : params.parameters()) {
        auto [mit, m_new] = state.m.try_emplace(name, Tensor::zeros(p.shape()));
        auto [vit, v_new] = state.v.try_emplace(name, Tensor::zeros(p.shape()));
        auto m = mit->second.data();
        auto v = vit->second.data();
        auto w = p.data();
        const auto& g = p.impl()->grad;
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

double grad_norm(const ParameterStore& params) {
    double ss = 0.0;
    for (const auto& [_, p] : params.parameters()) {
        for (double g : p.impl()->grad) {
            ss += g * g;
        }
    }
    return std::sqrt(ss);
}

double clip_grad_norm(ParameterStore& params, double max_norm) {
    const double norm = grad_norm(params);
    if (norm > max_norm && norm > 0.0) {
        const double factor = max_norm / norm;
        for (auto& [_, p] : params.parameters()) {
            for (double& g : p.impl()->grad) {
                g *= factor;
            }
        }
    }
    return norm;
}

} // namespace l2c
