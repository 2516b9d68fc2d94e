#pragma once

#include <cstddef>
#include <functional>

#include "l2c/tensor.hpp"

namespace l2c {

// Compares the tape gradient of a scalar function with central finite
// differences over every component of the leaf `x` (which `f` must read).
// Returns max_i |analytic_i - numeric_i| / max(1, |analytic_i|).
// A nonzero `max_components` checks an evenly strided subset of that size.
//
// Throws std::invalid_argument for eps outside [1e-7, 1e-3] and
// std::runtime_error when two evaluations at the same point disagree.
double gradient_check(const std::function<Tensor()>& f, Tensor& x, double eps = 1e-5,
                      std::size_t max_components = 0);

} // namespace l2c
