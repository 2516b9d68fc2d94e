#pragma once

// Flat run configuration: model shape, optimisation and ablation switches.
// Text form is one `key = value` per line; `#` starts a comment.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace l2c {

struct Config {
    // Model.
    std::size_t feature_dim = 512;  // D
    std::size_t num_nodes = 9;      // K
    std::size_t embed_dim = 256;    // E
    std::size_t hidden = 512;       // H_dec
    std::size_t gcn_layers = 2;

    // Optimisation.
    double lr = 1e-4;
    double lambda_tv = 1.0;
    std::size_t batch_pair = 16;
    std::size_t batch_single = 128;
    std::size_t max_iters = 1000;
    std::size_t eval_every = 100;
    std::uint64_t seed = 0;
    double clip_norm = 5.0;  // 0 disables clipping
    std::size_t max_decode_len = 48;
    // "canonical" trains on the first reference of each record, "random"
    // draws a reference per sample.
    std::string caption_choice = "canonical";

    // Ablations.
    bool no_semantic_pool = false;
    bool no_tv = false;
    bool no_gcn = false;
    bool no_single_task = false;

    static Config full();
    // D=32, K=4, H_dec=64, E=32, lr=1e-3, small batches.
    static Config desk();
    static Config preset(const std::string& name);

    // Throws ConfigError for unknown keys or unparsable values.
    void set(const std::string& key, const std::string& value);
    // Applies every `key = value` line of `text`.
    void apply_text(const std::string& text);
    void apply_file(const std::string& path);
    // Throws ConfigError when values are out of range.
    void validate() const;

    // Every key with its canonical text value, in a fixed order.
    std::vector<std::pair<std::string, std::string>> entries() const;
    std::string to_text() const;

    bool operator==(const Config&) const = default;
};

} // namespace l2c
