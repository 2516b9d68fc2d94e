#include "l2c/encoder.hpp"

#include <algorithm>
#include <stdexcept>

#include "l2c/errors.hpp"
#include "l2c/init.hpp"

namespace l2c {
namespace {

std::size_t halved(std::size_t n) { return (n + 2 - 3) / 2 + 1; }

std::size_t hidden_width(const EncoderConfig& c) { return std::max<std::size_t>(1, c.feature_dim / 2); }

Tensor as_batch(const Tensor& t, std::size_t single_rank) {
    if (t.rank() == single_rank) {
        Shape s = t.shape();
        s.insert(s.begin(), 1);
        return ops::reshape(t, s);
    }
    return t;
}

Tensor unbatch(const Tensor& t) {
    Shape s = t.shape();
    s.erase(s.begin());
    return ops::reshape(t, s);
}

// Broadcasts per-pixel weights [n, P] across K rows as a constant [n, K, P].
Tensor tile_rows(const std::vector<double>& weights, std::size_t n, std::size_t k, std::size_t plane) {
    Tensor out(Shape{n, k, plane});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t r = 0; r < k; ++r) {
            std::copy_n(weights.begin() + static_cast<std::ptrdiff_t>(b * plane), plane,
                        out.data().begin() + static_cast<std::ptrdiff_t>((b * k + r) * plane));
        }
    }
    return out;
}

struct PoolInputs {
    Tensor features;  // [n, D, H, W]
    Tensor mask;      // [n, H, W]
    bool single;
};

PoolInputs check_pool_inputs(const char* op, const Tensor& features, const Tensor& mask) {
    const bool single = features.rank() == 3;
    if (!(features.rank() == 3 || features.rank() == 4)) {
        throw ShapeError(std::string(op) + ": features must be [D,H,W] or [n,D,H,W], got " +
                         shape_str(features.shape()));
    }
    PoolInputs in{as_batch(features, 3), as_batch(mask, 2), single};
    const Shape& f = in.features.shape();
    if (in.mask.rank() != 3 || in.mask.dim(0) != f[0] || in.mask.dim(1) != f[2] || in.mask.dim(2) != f[3]) {
        throw ShapeError(std::string(op) + ": mask " + shape_str(mask.shape()) + " does not match features " +
                         shape_str(features.shape()));
    }
    return in;
}

} // namespace

void EncoderConfig::validate() const {
    if (num_nodes < 1) {
        throw ConfigError("encoder: K (num_nodes) must be >= 1");
    }
    if (feature_dim < 1) {
        throw ConfigError("encoder: D (feature_dim) must be >= 1");
    }
    if (in_channels < 1) {
        throw ConfigError("encoder: in_channels must be >= 1");
    }
    if (!(tv_lambda >= 0.0)) {
        throw ConfigError("encoder: tv_lambda must be >= 0");
    }
    const std::size_t expect = halved(halved(image_size));
    if (image_size < 2 || map_h != expect || map_w != expect) {
        throw ConfigError("encoder: image " + std::to_string(image_size) + "x" + std::to_string(image_size) +
                          " maps to " + std::to_string(expect) + "x" + std::to_string(expect) + ", config says " +
                          std::to_string(map_h) + "x" + std::to_string(map_w));
    }
}

Encoder::Encoder(const EncoderConfig& config, ParameterStore& store, Rng& rng, const std::string& prefix)
    : config_(config) {
    config_.validate();
    const std::size_t cin = config_.in_channels, d = config_.feature_dim, h = hidden_width(config_),
                      k = config_.num_nodes;
    conv1_w_ = store.add_parameter(prefix + ".backbone.conv1.weight", conv_init(h, cin, 3, rng));
    conv1_b_ = store.add_parameter(prefix + ".backbone.conv1.bias", Tensor::zeros({h}));
    conv2_w_ = store.add_parameter(prefix + ".backbone.conv2.weight", conv_init(d, h, 3, rng));
    conv2_b_ = store.add_parameter(prefix + ".backbone.conv2.bias", Tensor::zeros({d}));
    head1_w_ = store.add_parameter(prefix + ".head.conv1.weight", conv_init(h, d, 3, rng));
    head1_b_ = store.add_parameter(prefix + ".head.conv1.bias", Tensor::zeros({h}));
    bn_gamma_ = store.add_parameter(prefix + ".head.bn.weight", Tensor(Shape{h}, 1.0));
    bn_beta_ = store.add_parameter(prefix + ".head.bn.bias", Tensor::zeros({h}));
    head2_w_ = store.add_parameter(prefix + ".head.conv2.weight", conv_init(k, h, 1, rng));
    head2_b_ = store.add_parameter(prefix + ".head.conv2.bias", Tensor::zeros({k}));
    bn_.running_mean = store.add_buffer(prefix + ".head.bn.running_mean", Tensor::zeros({h}));
    bn_.running_var = store.add_buffer(prefix + ".head.bn.running_var", Tensor(Shape{h}, 1.0));
}

Tensor Encoder::backbone(const Tensor& images) const {
    const bool single = images.rank() == 3;
    const Tensor x = as_batch(images, 3);
    if (x.rank() != 4 || x.dim(1) != config_.in_channels || x.dim(2) != config_.image_size ||
        x.dim(3) != config_.image_size) {
        throw ShapeError("backbone: expected [n," + std::to_string(config_.in_channels) + "," +
                         std::to_string(config_.image_size) + "," + std::to_string(config_.image_size) +
                         "] images, got " + shape_str(images.shape()));
    }
    Tensor h = ops::relu(ops::conv2d(x, conv1_w_, conv1_b_, 2, 1));
    Tensor f = ops::relu(ops::conv2d(h, conv2_w_, conv2_b_, 2, 1));
    return single ? unbatch(f) : f;
}

Tensor Encoder::confidence_head(const Tensor& features, bool training) {
    const bool single = features.rank() == 3;
    const Tensor f = as_batch(features, 3);
    if (f.rank() != 4 || f.dim(1) != config_.feature_dim || f.dim(2) != config_.map_h || f.dim(3) != config_.map_w) {
        throw ShapeError("confidence_head: features " + shape_str(features.shape()) + " do not match D=" +
                         std::to_string(config_.feature_dim) + " and map " + std::to_string(config_.map_h) + "x" +
                         std::to_string(config_.map_w));
    }
    Tensor h = ops::conv2d(f, head1_w_, head1_b_, 1, 1);
    h = ops::relu(ops::batch_norm2d(h, bn_gamma_, bn_beta_, bn_, training));
    Tensor logits = ops::conv2d(h, head2_w_, head2_b_, 1, 0);
    Tensor c = ops::softmax(logits, 1);
    return single ? unbatch(c) : c;
}

FeatureBundle Encoder::encode(const Tensor& images, const Tensor& masks, bool training) {
    FeatureBundle out;
    out.features = as_batch(backbone(images), 3);
    out.mask = as_batch(masks, 2);
    for (double v : out.mask.data()) {
        if (v != 0.0 && v != 1.0) {
            throw std::invalid_argument("encode: mask must be binary");
        }
    }
    out.confidence = confidence_head(out.features, training);
    return out;
}

Tensor semantic_pool(const Tensor& features, const Tensor& mask, const Tensor& confidence, PoolDiagnostics* diag) {
    PoolInputs in = check_pool_inputs("semantic_pool", features, mask);
    const Tensor c = as_batch(confidence, 3);
    const Shape& f = in.features.shape();
    if (c.rank() != 4 || c.dim(0) != f[0] || c.dim(2) != f[2] || c.dim(3) != f[3]) {
        throw ShapeError("semantic_pool: confidence " + shape_str(confidence.shape()) + " does not match features " +
                         shape_str(features.shape()));
    }
    const std::size_t n = f[0], d = f[1], plane = f[2] * f[3], k = c.dim(1);
    std::vector<double> weights(in.mask.data().begin(), in.mask.data().end());
    for (std::size_t b = 0; b < n; ++b) {
        const bool empty = std::all_of(weights.begin() + static_cast<std::ptrdiff_t>(b * plane),
                                       weights.begin() + static_cast<std::ptrdiff_t>((b + 1) * plane),
                                       [](double v) { return v == 0.0; });
        if (empty && diag != nullptr) {
            ++diag->empty_masks;
        }
    }
    Tensor masked = ops::mul(ops::reshape(c, {n, k, plane}), tile_rows(weights, n, k, plane));
    Tensor per_pixel = ops::transpose(ops::reshape(in.features, {n, d, plane}));
    Tensor nodes = ops::bmm(masked, per_pixel);
    return in.single ? unbatch(nodes) : nodes;
}

Tensor masked_average_pool(const Tensor& features, const Tensor& mask, std::size_t num_nodes, PoolDiagnostics* diag) {
    PoolInputs in = check_pool_inputs("masked_average_pool", features, mask);
    if (num_nodes < 1) {
        throw ConfigError("masked_average_pool: K must be >= 1");
    }
    const Shape& f = in.features.shape();
    const std::size_t n = f[0], d = f[1], plane = f[2] * f[3];
    std::vector<double> weights(in.mask.data().begin(), in.mask.data().end());
    for (std::size_t b = 0; b < n; ++b) {
        double area = 0.0;
        for (std::size_t p = 0; p < plane; ++p) {
            area += weights[b * plane + p];
        }
        if (area == 0.0) {
            if (diag != nullptr) {
                ++diag->empty_masks;
            }
            continue;
        }
        for (std::size_t p = 0; p < plane; ++p) {
            weights[b * plane + p] /= area;
        }
    }
    Tensor per_pixel = ops::transpose(ops::reshape(in.features, {n, d, plane}));
    Tensor nodes = ops::bmm(tile_rows(weights, n, num_nodes, plane), per_pixel);
    return in.single ? unbatch(nodes) : nodes;
}

Tensor tv_sum(const Tensor& confidence) {
    const Tensor c = as_batch(confidence, 3);
    if (c.rank() != 4) {
        throw ShapeError("tv_loss: confidence must be [K,H,W] or [n,K,H,W], got " + shape_str(confidence.shape()));
    }
    const std::size_t h = c.dim(2), w = c.dim(3);
    Tensor total = Tensor::scalar(0.0);
    if (h > 1) {
        total = ops::add(total, ops::sum(ops::abs(ops::sub(ops::slice(c, 2, 1, h), ops::slice(c, 2, 0, h - 1)))));
    }
    if (w > 1) {
        total = ops::add(total, ops::sum(ops::abs(ops::sub(ops::slice(c, 3, 1, w), ops::slice(c, 3, 0, w - 1)))));
    }
    return total;
}

Tensor tv_loss(const Tensor& confidence) {
    return ops::scale(tv_sum(confidence), 1.0 / static_cast<double>(confidence.size()));
}

Tensor pool_mask(const Tensor& mask, std::size_t map_h, std::size_t map_w) {
    const bool single = mask.rank() == 2;
    if (!(mask.rank() == 2 || mask.rank() == 3)) {
        throw ShapeError("pool_mask: mask must be [S,S] or [n,S,S], got " + shape_str(mask.shape()));
    }
    const std::size_t n = single ? 1 : mask.dim(0);
    const std::size_t sh = mask.dim(mask.rank() - 2), sw = mask.dim(mask.rank() - 1);
    if (map_h == 0 || map_w == 0 || sh < map_h || sw < map_w) {
        throw ShapeError("pool_mask: cannot pool " + shape_str(mask.shape()) + " to " + std::to_string(map_h) + "x" +
                         std::to_string(map_w));
    }
    Tensor out(single ? Shape{map_h, map_w} : Shape{n, map_h, map_w});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t y = 0; y < sh; ++y) {
            for (std::size_t x = 0; x < sw; ++x) {
                if (mask[(b * sh + y) * sw + x] != 0.0) {
                    out[(b * map_h + y * map_h / sh) * map_w + x * map_w / sw] = 1.0;
                }
            }
        }
    }
    return out;
}

} // namespace l2c
