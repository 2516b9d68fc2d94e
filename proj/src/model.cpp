#include "l2c/model.hpp"

#include "l2c/data.hpp"
#include "l2c/ops.hpp"

namespace l2c {

namespace {
constexpr std::uint64_t kInitStream = 0x1417;
}

EncoderConfig encoder_config(const Config& config) {
    EncoderConfig e;
    e.in_channels = kImageChannels;
    e.image_size = kImageSize;
    e.map_h = e.map_w = 8;
    e.feature_dim = config.feature_dim;
    e.num_nodes = config.num_nodes;
    e.tv_lambda = config.lambda_tv;
    return e;
}

Model::Model(const Config& config, std::size_t vocab_size) : config_(config) {
    config_.validate();
    Rng rng(mix_seed(config_.seed, kInitStream));
    encoder_ = std::make_unique<Encoder>(encoder_config(config_), store_, rng);
    graph_ = std::make_unique<GraphReasoner>(
        GraphConfig{config_.feature_dim, config_.gcn_layers, !config_.no_gcn}, store_, rng);
    decoder_ = std::make_unique<Decoder>(
        DecoderConfig{vocab_size, config_.embed_dim, config_.hidden, config_.feature_dim}, store_, rng);
}

NodeOutput Model::enhanced_nodes(const Tensor& images, const Tensor& masks, bool training) {
    FeatureBundle fb = encoder_->encode(images, masks, training);
    NodeOutput out;
    out.confidence = fb.confidence;
    Tensor raw = config_.no_semantic_pool
                     ? masked_average_pool(fb.features, fb.mask, config_.num_nodes, &out.diag)
                     : semantic_pool(fb.features, fb.mask, fb.confidence, &out.diag);
    out.nodes = graph_->forward({raw, NodeKind::raw});
    return out;
}

NodeSet Model::pair_difference(const NodeSet& both) {
    const std::size_t b = both.nodes.dim(0) / 2;
    return node_difference({ops::slice(both.nodes, 0, 0, b), both.kind},
                           {ops::slice(both.nodes, 0, b, 2 * b), both.kind});
}

std::vector<std::vector<int>> Model::caption_pairs(const Tensor& images_a, const Tensor& masks_a,
                                                   const Tensor& images_b, const Tensor& masks_b) {
    NoGradGuard no_grad;
    NodeOutput out = enhanced_nodes(ops::concat({images_a, images_b}, 0), ops::concat({masks_a, masks_b}, 0), false);
    return decoder_->greedy_decode(pair_difference(out.nodes), config_.max_decode_len);
}

} // namespace l2c
