#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "l2c/parameters.hpp"
#include "l2c/tensor.hpp"

namespace l2c {

struct AdamState {
    std::map<std::string, Tensor> m;
    std::map<std::string, Tensor> v;
    std::int64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One bias-corrected Adam update over every parameter in `params`.
// Throws TapeError when a parameter has no gradient buffer.
void adam_step(ParameterStore& params, AdamState& state, double lr);

// Rescales gradients so their global L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_grad_norm(ParameterStore& params, double max_norm);

double grad_norm(const ParameterStore& params);

} // namespace l2c
