#pragma once

#include <cstddef>
#include <string>

#include "l2c/ops.hpp"
#include "l2c/parameters.hpp"
#include "l2c/rng.hpp"
#include "l2c/tensor.hpp"

namespace l2c {

struct EncoderConfig {
    std::size_t in_channels = 8;
    std::size_t image_size = 32;
    std::size_t feature_dim = 512;  // D
    std::size_t num_nodes = 9;      // K
    std::size_t map_h = 8;
    std::size_t map_w = 8;
    double tv_lambda = 1.0;

    // Throws ConfigError. The backbone halves the image twice, so
    // map extents must equal ceil(ceil(image_size / 2) / 2).
    void validate() const;
};

// Per-image encoder products, batched along the leading axis.
struct FeatureBundle {
    Tensor features;    // F: [n, D, H, W]
    Tensor mask;        // B: [n, H, W], binary
    Tensor confidence;  // C: [n, K, H, W], a distribution over K at each pixel
};

struct PoolDiagnostics {
    std::size_t empty_masks = 0;
    bool degenerate() const { return empty_masks != 0; }
};

// Backbone stub plus confidence head. Parameters live in the shared store
// under `prefix`.
class Encoder {
public:
    Encoder(const EncoderConfig& config, ParameterStore& store, Rng& rng, const std::string& prefix = "encoder");

    const EncoderConfig& config() const { return config_; }

    // [n, Cin, S, S] -> [n, D, H, W]; rank-3 input is treated as one image.
    Tensor backbone(const Tensor& images) const;
    // [n, D, H, W] -> [n, K, H, W]: conv3x3(D->D/2) -> batchnorm -> relu ->
    // conv1x1(D/2->K) -> softmax over K.
    Tensor confidence_head(const Tensor& features, bool training);

    // masks: [n, H, W] already at map resolution.
    FeatureBundle encode(const Tensor& images, const Tensor& masks, bool training);

    ops::BatchNormStats& batch_norm_stats() { return bn_; }

private:
    EncoderConfig config_;
    Tensor conv1_w_, conv1_b_, conv2_w_, conv2_b_;
    Tensor head1_w_, head1_b_, bn_gamma_, bn_beta_, head2_w_, head2_b_;
    ops::BatchNormStats bn_;
};

// v_k = sum_{i,j} F[:, i, j] * B[i, j] * C[k, i, j]; no normalization by mask
// area. Accepts single images (F [D,H,W], B [H,W], C [K,H,W] -> [K,D]) or
// batches with a leading n. An all-zero mask yields zero nodes and is
// counted in `diag`. The mask is treated as data (no gradient).
Tensor semantic_pool(const Tensor& features, const Tensor& mask, const Tensor& confidence,
                     PoolDiagnostics* diag = nullptr);

// Ablation replacement for semantic_pool: every one of the K nodes is the
// mean feature over the mask.
Tensor masked_average_pool(const Tensor& features, const Tensor& mask, std::size_t num_nodes,
                           PoolDiagnostics* diag = nullptr);

// Sum over classes and in-range positions of |C[k,i+1,j]-C[k,i,j]| +
// |C[k,i,j+1]-C[k,i,j]|, before normalization. Single [K,H,W] or batched.
Tensor tv_sum(const Tensor& confidence);
// tv_sum divided by the element count of `confidence`.
Tensor tv_loss(const Tensor& confidence);

// Max-pools a binary [S, S] (or [n, S, S]) mask down to [H, W].
Tensor pool_mask(const Tensor& mask, std::size_t map_h, std::size_t map_w);

} // namespace l2c
