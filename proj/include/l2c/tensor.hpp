#pragma once

// Dense row-major float64 tensors with a reverse-mode gradient tape.
//
// A Tensor is a shared handle. Ops whose inputs include a tracked tensor
// (a leaf with requires_grad, or the output of another tracked op) record a
// node on the tape; backward() walks those nodes once and then releases them.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace l2c {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl;

using ImplPtr = std::shared_ptr<TensorImpl>;

// One recorded op. `backward` reads the output gradient and accumulates
// into the gradients of `inputs`.
struct TapeNode {
    const char* op = "";
    std::vector<ImplPtr> inputs;
    std::function<void(const TensorImpl& out, std::span<const ImplPtr> inputs)> backward;
    bool consumed = false;
};

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // empty until a gradient arrives
    bool requires_grad = false;
    std::shared_ptr<TapeNode> node;

    bool tracked() const { return requires_grad || node != nullptr; }
    // Allocates the gradient buffer on first use.
    std::vector<double>& grad_buffer();
};

class Tensor {
public:
    Tensor();
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value);
    static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0); }
    static Tensor vector(std::initializer_list<double> values);
    // Rows of equal length.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const { return impl_->data.size(); }

    std::span<double> data() { return impl_->data; }
    std::span<const double> data() const { return impl_->data; }
    double& operator[](std::size_t i) { return impl_->data[i]; }
    double operator[](std::size_t i) const { return impl_->data[i]; }
    double item() const;

    bool has_grad() const { return !impl_->grad.empty(); }
    // Zeros when no gradient has been accumulated yet.
    std::vector<double> grad() const;
    void zero_grad() { impl_->grad.clear(); }

    Tensor& set_requires_grad(bool on = true);
    bool requires_grad() const { return impl_->requires_grad; }
    bool tracked() const { return impl_->tracked(); }
    bool is_leaf() const { return impl_->node == nullptr; }

    // Untracked copy of the values.
    Tensor detach() const;

    const ImplPtr& impl() const { return impl_; }
    explicit Tensor(ImplPtr impl) : impl_(std::move(impl)) {}

private:
    ImplPtr impl_;
};

// Populates grad on every tracked leaf reachable from `loss` and consumes the
// tape. Leaf gradients accumulate across calls; use zero_grad between steps.
void backward(const Tensor& loss);

bool grad_enabled();

// Disables tape recording on this thread for the guard's lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

// Builds an op result; records a tape node when any input is tracked and
// recording is enabled. Fails fast on non-finite output values.
using BackwardFn = std::function<void(const TensorImpl& out, std::span<const ImplPtr> inputs)>;
Tensor make_result(const char* op, Shape shape, std::vector<double> data, std::initializer_list<Tensor> inputs,
                   BackwardFn backward);
Tensor make_result(const char* op, Shape shape, std::vector<double> data, const std::vector<Tensor>& inputs,
                   BackwardFn backward);

} // namespace l2c
