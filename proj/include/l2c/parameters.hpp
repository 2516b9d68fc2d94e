#pragma once

#include <map>
#include <string>
#include <vector>

#include "l2c/tensor.hpp"

namespace l2c {

// Ordered name -> tensor registry. Parameters are trainable leaves; buffers
// (batchnorm running statistics) are saved with checkpoints but never updated
// by the optimizer.
class ParameterStore {
public:
    Tensor& add_parameter(const std::string& name, Tensor value);
    Tensor& add_buffer(const std::string& name, Tensor value);

    bool contains(const std::string& name) const;
    Tensor& get(const std::string& name);
    const Tensor& get(const std::string& name) const;

    const std::map<std::string, Tensor>& parameters() const { return params_; }
    const std::map<std::string, Tensor>& buffers() const { return buffers_; }
    std::map<std::string, Tensor>& parameters() { return params_; }
    std::map<std::string, Tensor>& buffers() { return buffers_; }

    void zero_grad();
    std::size_t parameter_count() const;

    // Copies values (not handles) of parameters and buffers in `other` whose
    // names and shapes match; throws FormatError on any mismatch.
    void assign_from(const std::map<std::string, Tensor>& values);
    // Deep copy of every parameter and buffer value.
    std::map<std::string, Tensor> snapshot() const;

private:
    std::map<std::string, Tensor> params_;
    std::map<std::string, Tensor> buffers_;
};

} // namespace l2c
