#pragma once

// Differentiable tensor ops. Shapes must conform exactly; the only implicit
// broadcast is the scalar factor in scale()/add_scalar(). Bias addition is
// an explicit op (add_bias). Every op throws ShapeError naming itself and the
// offending extents, and NumericError if it produces NaN/Inf.

#include <cstddef>
#include <vector>

#include "l2c/tensor.hpp"

namespace l2c::ops {

// Elementwise, identical shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
// x: [..., n], bias: [n]
Tensor add_bias(const Tensor& x, const Tensor& bias);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor abs(const Tensor& a);

// [m, k] x [k, n]
Tensor matmul(const Tensor& a, const Tensor& b);
// [b, m, k] x [b, k, n]
Tensor bmm(const Tensor& a, const Tensor& b);
// Swaps the last two axes of a rank-2 or rank-3 tensor.
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Removes `axis`.
Tensor sum_axis(const Tensor& a, std::size_t axis);
Tensor mean_axis(const Tensor& a, std::size_t axis);

Tensor softmax(const Tensor& a, std::size_t axis);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
// Half-open range [begin, end) along `axis`.
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);
// Stacks equal-shaped tensors along a new leading axis.
Tensor stack(const std::vector<Tensor>& parts);

// x: [n, c, h, w]; weight: [o, c, k, k]; bias: [o]. Square kernels.
// Output extent per spatial axis: (in + 2*pad - k) / stride + 1.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, std::size_t stride, std::size_t pad);

struct BatchNormStats {
    Tensor running_mean;
    Tensor running_var;
};

// x: [n, c, h, w]; gamma, beta: [c]. Training mode normalizes with batch
// statistics over (n, h, w) and updates `stats` with `momentum`; evaluation
// mode uses `stats`.
Tensor batch_norm2d(const Tensor& x, const Tensor& gamma, const Tensor& beta, BatchNormStats& stats, bool training,
                    double momentum = 0.1, double eps = 1e-5);

// table: [v, e]; returns [ids.size(), e].
Tensor embedding(const Tensor& table, const std::vector<int>& ids);

// logits: [b, v]. Sum over rows of -log softmax(logits)[target]; rows whose
// target equals ignore_index contribute nothing.
Tensor cross_entropy_sum(const Tensor& logits, const std::vector<int>& targets, int ignore_index = -1);

} // namespace l2c::ops
