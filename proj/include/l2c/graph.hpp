#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "l2c/parameters.hpp"
#include "l2c/rng.hpp"
#include "l2c/tensor.hpp"

namespace l2c {

enum class NodeKind { raw, enhanced, difference };

const char* node_kind_name(NodeKind kind);

// K node vectors of dimension D: [K, D], or [n, K, D] for a batch.
struct NodeSet {
    Tensor nodes;
    NodeKind kind = NodeKind::raw;

    std::size_t num_nodes() const { return nodes.dim(nodes.rank() - 2); }
    std::size_t dim() const { return nodes.dim(nodes.rank() - 1); }
    bool batched() const { return nodes.rank() == 3; }
};

struct GraphConfig {
    std::size_t feature_dim = 512;
    std::size_t layers = 2;
    // false bypasses affinity and GCN entirely (raw nodes pass through).
    bool enabled = true;
};

// Fully connected affinity graph over nodes plus GCN layers. One instance
// is shared by both images of a pair and by both tasks.
class GraphReasoner {
public:
    GraphReasoner(const GraphConfig& config, ParameterStore& store, Rng& rng, const std::string& prefix = "graph");

    const GraphConfig& config() const { return config_; }

    // A[i, j] = (W_i v_i)^T (W_j v_j); [K, K] or [n, K, K].
    Tensor affinity(const NodeSet& v) const;
    // V_{l+1} = relu(A_hat V_l W_l) for each layer.
    NodeSet gcn_forward(const NodeSet& v, const Tensor& adjacency) const;
    // affinity -> normalize_adjacency -> gcn_forward, or pass-through when disabled.
    NodeSet forward(const NodeSet& v) const;

    Tensor& w_i() { return w_i_; }
    Tensor& w_j() { return w_j_; }
    std::vector<Tensor>& layer_weights() { return layers_; }

private:
    GraphConfig config_;
    Tensor w_i_, w_j_;
    std::vector<Tensor> layers_;
};

// Row-wise softmax over the last axis.
Tensor normalize_adjacency(const Tensor& affinity);

// v_diff,k = v_k(first) - v_k(second).
NodeSet node_difference(const NodeSet& first, const NodeSet& second);

} // namespace l2c
