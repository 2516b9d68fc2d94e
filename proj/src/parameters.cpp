#include "l2c/parameters.hpp"

#include "l2c/errors.hpp"

namespace l2c {

Tensor& ParameterStore::add_parameter(const std::string& name, Tensor value) {
    if (contains(name)) {
        throw ConfigError("duplicate parameter name '" + name + "'");
    }
    value.set_requires_grad(true);
    return params_.emplace(name, std::move(value)).first->second;
}

Tensor& ParameterStore::add_buffer(const std::string& name, Tensor value) {
    if (contains(name)) {
        throw ConfigError("duplicate buffer name '" + name + "'");
    }
    return buffers_.emplace(name, std::move(value)).first->second;
}

bool ParameterStore::contains(const std::string& name) const {
    return params_.count(name) != 0 || buffers_.count(name) != 0;
}

Tensor& ParameterStore::get(const std::string& name) {
    if (auto it = params_.find(name); it != params_.end()) {
        return it->second;
    }
    if (auto it = buffers_.find(name); it != buffers_.end()) {
        return it->second;
    }
    throw ConfigError("unknown parameter '" + name + "'");
}

const Tensor& ParameterStore::get(const std::string& name) const {
    return const_cast<ParameterStore*>(this)->get(name);
}

void ParameterStore::zero_grad() {
    for (auto& [_, t] : params_) {
        t.zero_grad();
    }
}

std::size_t ParameterStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : params_) {
        n += t.size();
    }
    return n;
}

void ParameterStore::assign_from(const std::map<std::string, Tensor>& values) {
    for (const auto& [name, value] : values) {
        if (!contains(name)) {
            throw FormatError("checkpoint tensor '" + name + "' has no matching model parameter");
        }
        Tensor& dst = get(name);
        if (dst.shape() != value.shape()) {
            throw FormatError("checkpoint tensor '" + name + "' has shape " + shape_str(value.shape()) +
                              ", model expects " + shape_str(dst.shape()));
        }
        std::copy(value.data().begin(), value.data().end(), dst.data().begin());
    }
    for (const auto* group : {&params_, &buffers_}) {
        for (const auto& [name, _] : *group) {
            if (values.count(name) == 0) {
                throw FormatError("checkpoint is missing tensor '" + name + "'");
            }
        }
    }
}

std::map<std::string, Tensor> ParameterStore::snapshot() const {
    std::map<std::string, Tensor> out;
    for (const auto* group : {&params_, &buffers_}) {
        for (const auto& [name, t] : *group) {
            out.emplace(name, t.detach());
        }
    }
    return out;
}

} // namespace l2c
