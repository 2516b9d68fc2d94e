#pragma once

#include <cmath>

#include "l2c/rng.hpp"
#include "l2c/tensor.hpp"

namespace l2c {

inline Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) {
        v = rng.uniform(-bound, bound);
    }
    return t;
}

// He-uniform for relu-fed convolutions.
inline Tensor conv_init(std::size_t out, std::size_t in, std::size_t k, Rng& rng) {
    return uniform_tensor({out, in, k, k}, std::sqrt(6.0 / static_cast<double>(in * k * k)), rng);
}

// Glorot-uniform for dense matrices.
inline Tensor dense_init(std::size_t rows, std::size_t cols, Rng& rng) {
    return uniform_tensor({rows, cols}, std::sqrt(6.0 / static_cast<double>(rows + cols)), rng);
}

} // namespace l2c
