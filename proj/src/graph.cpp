#include "l2c/graph.hpp"

#include <stdexcept>

#include "l2c/errors.hpp"
#include "l2c/init.hpp"
#include "l2c/ops.hpp"

namespace l2c {
namespace {

void require_kind(const char* op, const NodeSet& v, NodeKind kind) {
    if (v.kind != kind) {
        throw std::invalid_argument(std::string(op) + ": expected " + node_kind_name(kind) + " nodes, got " +
                                    node_kind_name(v.kind));
    }
}

// Applies a right-multiplied D x D matrix to every node of [K,D] or [n,K,D].
Tensor project(const Tensor& nodes, const Tensor& w) {
    if (nodes.rank() == 2) {
        return ops::matmul(nodes, w);
    }
    const Shape s = nodes.shape();
    return ops::reshape(ops::matmul(ops::reshape(nodes, {s[0] * s[1], s[2]}), w), s);
}

} // namespace

const char* node_kind_name(NodeKind kind) {
    switch (kind) {
    case NodeKind::raw:
        return "raw";
    case NodeKind::enhanced:
        return "enhanced";
    case NodeKind::difference:
        return "difference";
    }
    return "?";
}

GraphReasoner::GraphReasoner(const GraphConfig& config, ParameterStore& store, Rng& rng, const std::string& prefix)
    : config_(config) {
    if (config_.layers < 1) {
        throw ConfigError("graph: GCN layer count must be >= 1");
    }
    const std::size_t d = config_.feature_dim;
    w_i_ = store.add_parameter(prefix + ".affinity.w_i", dense_init(d, d, rng));
    w_j_ = store.add_parameter(prefix + ".affinity.w_j", dense_init(d, d, rng));
    for (std::size_t l = 0; l < config_.layers; ++l) {
        layers_.push_back(store.add_parameter(prefix + ".gcn." + std::to_string(l) + ".weight", dense_init(d, d, rng)));
    }
}

Tensor GraphReasoner::affinity(const NodeSet& v) const {
    require_kind("affinity", v, NodeKind::raw);
    if (v.dim() != config_.feature_dim) {
        throw ShapeError("affinity: node dimension " + std::to_string(v.dim()) + " does not match D=" +
                         std::to_string(config_.feature_dim));
    }
    // Row form of W v is v W^T.
    Tensor p = project(v.nodes, ops::transpose(w_i_));
    Tensor q = project(v.nodes, ops::transpose(w_j_));
    if (!v.batched()) {
        return ops::matmul(p, ops::transpose(q));
    }
    return ops::bmm(p, ops::transpose(q));
}

NodeSet GraphReasoner::gcn_forward(const NodeSet& v, const Tensor& adjacency) const {
    require_kind("gcn_forward", v, NodeKind::raw);
    if (layers_.empty()) {
        throw ConfigError("gcn_forward: GCN layer count must be >= 1");
    }
    const std::size_t k = v.num_nodes();
    const Shape want = v.batched() ? Shape{v.nodes.dim(0), k, k} : Shape{k, k};
    if (adjacency.shape() != want) {
        throw ShapeError("gcn_forward: adjacency " + shape_str(adjacency.shape()) + " does not match " +
                         shape_str(want));
    }
    Tensor h = v.nodes;
    for (const Tensor& w : layers_) {
        Tensor mixed = v.batched() ? ops::bmm(adjacency, h) : ops::matmul(adjacency, h);
        h = ops::relu(project(mixed, w));
    }
    return {h, NodeKind::enhanced};
}

NodeSet GraphReasoner::forward(const NodeSet& v) const {
    if (!config_.enabled) {
        require_kind("graph", v, NodeKind::raw);
        return {v.nodes, NodeKind::enhanced};
    }
    return gcn_forward(v, normalize_adjacency(affinity(v)));
}

Tensor normalize_adjacency(const Tensor& affinity) {
    if (affinity.rank() < 2 || affinity.dim(affinity.rank() - 1) != affinity.dim(affinity.rank() - 2)) {
        throw ShapeError("normalize_adjacency: expected square [K,K] or [n,K,K], got " + shape_str(affinity.shape()));
    }
    return ops::softmax(affinity, affinity.rank() - 1);
}

NodeSet node_difference(const NodeSet& first, const NodeSet& second) {
    require_kind("node_difference", first, NodeKind::enhanced);
    require_kind("node_difference", second, NodeKind::enhanced);
    if (first.nodes.shape() != second.nodes.shape()) {
        throw ShapeError("node_difference: node sets " + shape_str(first.nodes.shape()) + " and " +
                         shape_str(second.nodes.shape()) + " differ");
    }
    return {ops::sub(first.nodes, second.nodes), NodeKind::difference};
}

} // namespace l2c
