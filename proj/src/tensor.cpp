#include "l2c/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "l2c/errors.hpp"

namespace l2c {

std::size_t numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) {
        n *= e;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        os << (i ? "x" : "") << shape[i];
    }
    os << ']';
    return os.str();
}

std::vector<double>& TensorImpl::grad_buffer() {
    if (grad.empty()) {
        grad.assign(data.size(), 0.0);
    }
    return grad;
}

Tensor::Tensor() : Tensor(Shape{1}, 0.0) {}

Tensor::Tensor(Shape shape, double fill) : impl_(std::make_shared<TensorImpl>()) {
    for (std::size_t e : shape) {
        if (e == 0) {
            throw ShapeError("tensor: zero extent in shape " + shape_str(shape));
        }
    }
    impl_->data.assign(numel(shape), fill);
    impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : impl_(std::make_shared<TensorImpl>()) {
    for (std::size_t e : shape) {
        if (e == 0) {
            throw ShapeError("tensor: zero extent in shape " + shape_str(shape));
        }
    }
    if (numel(shape) != data.size()) {
        throw ShapeError("tensor: shape " + shape_str(shape) + " needs " + std::to_string(numel(shape)) +
                         " values, got " + std::to_string(data.size()));
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor(Shape{values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) {
            throw ShapeError("tensor: ragged matrix literal");
        }
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor(Shape{r, c}, std::move(data));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank()) {
        throw ShapeError("tensor: axis " + std::to_string(axis) + " out of range for " + shape_str(shape()));
    }
    return impl_->shape[axis];
}

double Tensor::item() const {
    if (size() != 1) {
        throw ShapeError("item: tensor of shape " + shape_str(shape()) + " is not a scalar");
    }
    return impl_->data[0];
}

std::vector<double> Tensor::grad() const {
    if (impl_->grad.empty()) {
        return std::vector<double>(size(), 0.0);
    }
    return impl_->grad;
}

Tensor& Tensor::set_requires_grad(bool on) {
    if (!is_leaf()) {
        throw TapeError("requires_grad can only be set on leaf tensors");
    }
    impl_->requires_grad = on;
    return *this;
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->data); }

namespace {

thread_local bool g_grad_enabled = true;

// Post-order over tape nodes, iterative to survive long decoder unrolls.
// Holds owning handles: releasing a node's inputs must not free tensors that
// are still waiting in the order.
std::vector<ImplPtr> topo_order(const ImplPtr& root) {
    std::vector<ImplPtr> order;
    std::unordered_set<TensorImpl*> seen;
    std::vector<std::pair<ImplPtr, std::size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [t, next] = stack.back();
        if (t->node && next < t->node->inputs.size()) {
            ImplPtr child = t->node->inputs[next++];
            if (child->node && seen.insert(child.get()).second) {
                stack.emplace_back(child, 0);
            }
            continue;
        }
        order.push_back(std::move(t));
        stack.pop_back();
    }
    return order;
}

} // namespace

void backward(const Tensor& loss) {
    TensorImpl* root = loss.impl().get();
    if (root->data.size() != 1) {
        throw TapeError("backward: loss must be scalar, got shape " + shape_str(root->shape));
    }
    if (!root->tracked()) {
        throw TapeError("backward: loss is not on the gradient tape");
    }
    if (root->node && root->node->consumed) {
        throw TapeError("backward: tape already consumed by an earlier backward call");
    }
    root->grad_buffer()[0] += 1.0;
    if (!root->node) {
        return;
    }
    std::vector<ImplPtr> order = topo_order(loss.impl());
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorImpl* t = it->get();
        TapeNode& node = *t->node;
        if (!t->grad.empty() && node.backward) {
            node.backward(*t, node.inputs);
        }
        node.consumed = true;
        node.backward = nullptr;
        node.inputs.clear();
        if (t != root) {
            std::vector<double>().swap(t->grad);
        }
    }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

namespace {

Tensor finish(const char* op, Shape shape, std::vector<double> data, const Tensor* first, std::size_t count,
              BackwardFn backward) {
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(op) + ": produced a non-finite value");
        }
    }
    Tensor out(std::move(shape), std::move(data));
    if (!g_grad_enabled) {
        return out;
    }
    bool any = false;
    for (std::size_t i = 0; i < count; ++i) {
        any = any || first[i].tracked();
    }
    if (!any) {
        return out;
    }
    auto node = std::make_shared<TapeNode>();
    node->op = op;
    node->inputs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        node->inputs.push_back(first[i].impl());
    }
    node->backward = std::move(backward);
    out.impl()->node = std::move(node);
    return out;
}

} // namespace

Tensor make_result(const char* op, Shape shape, std::vector<double> data, std::initializer_list<Tensor> inputs,
                   BackwardFn backward) {
    return finish(op, std::move(shape), std::move(data), inputs.begin(), inputs.size(), std::move(backward));
}

Tensor make_result(const char* op, Shape shape, std::vector<double> data, const std::vector<Tensor>& inputs,
                   BackwardFn backward) {
    return finish(op, std::move(shape), std::move(data), inputs.data(), inputs.size(), std::move(backward));
}

} // namespace l2c
