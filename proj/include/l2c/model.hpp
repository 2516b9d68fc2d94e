#pragma once

// One encoder, one graph reasoner and one decoder, shared by both images of
// a pair and by both tasks.

#include <memory>
#include <vector>

#include "l2c/config.hpp"
#include "l2c/decoder.hpp"
#include "l2c/encoder.hpp"
#include "l2c/graph.hpp"
#include "l2c/parameters.hpp"

namespace l2c {

EncoderConfig encoder_config(const Config& config);

struct NodeOutput {
    NodeSet nodes;      // enhanced, [n, K, D]
    Tensor confidence;  // [n, K, H, W]
    PoolDiagnostics diag;
};

class Model {
public:
    // Parameters are initialised from a stream derived from config.seed.
    Model(const Config& config, std::size_t vocab_size);
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    const Config& config() const { return config_; }
    ParameterStore& store() { return store_; }
    const ParameterStore& store() const { return store_; }
    Encoder& encoder() { return *encoder_; }
    GraphReasoner& graph() { return *graph_; }
    const Decoder& decoder() const { return *decoder_; }

    // images [n, C, S, S], masks [n, H, W] at map resolution. Honours the
    // no_semantic_pool and no_gcn switches.
    NodeOutput enhanced_nodes(const Tensor& images, const Tensor& masks, bool training);

    // First half of `both` minus second half, for pairs stacked as
    // [a_1..a_B, b_1..b_B].
    static NodeSet pair_difference(const NodeSet& both);

    // Eval-mode greedy captions for B pairs.
    std::vector<std::vector<int>> caption_pairs(const Tensor& images_a, const Tensor& masks_a, const Tensor& images_b,
                                                const Tensor& masks_b);

private:
    Config config_;
    ParameterStore store_;
    std::unique_ptr<Encoder> encoder_;
    std::unique_ptr<GraphReasoner> graph_;
    std::unique_ptr<Decoder> decoder_;
};

} // namespace l2c
