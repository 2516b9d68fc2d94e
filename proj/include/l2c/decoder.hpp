#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "l2c/graph.hpp"
#include "l2c/parameters.hpp"
#include "l2c/rng.hpp"
#include "l2c/tensor.hpp"

namespace l2c {

struct DecoderConfig {
    std::size_t vocab_size = 0;
    std::size_t embed_dim = 256;   // E
    std::size_t hidden = 512;      // H_dec
    std::size_t context_dim = 512; // D
};

struct DecoderState {
    Tensor h;  // [b, H_dec]
    Tensor c;  // [b, H_dec]
    std::size_t t = 0;
};

struct DecoderStep {
    Tensor logits;  // [b, vocab]
    DecoderState state;
    // Gate activations, exposed for inspection.
    Tensor input_gate, forget_gate, output_gate, candidate;
};

struct NllResult {
    Tensor mean;     // per-token loss, averaged over non-pad targets
    Tensor sum;
    std::size_t tokens = 0;
};

// Single LSTM language decoder shared by the comparison and single-image
// tasks. At every step the input is [embed(y_prev), mean of the K nodes].
class Decoder {
public:
    Decoder(const DecoderConfig& config, ParameterStore& store, Rng& rng, const std::string& prefix = "decoder");

    const DecoderConfig& config() const { return config_; }

    // Mean over the K nodes: [K, D] -> [D], [n, K, D] -> [n, D].
    Tensor context(const NodeSet& v) const;

    DecoderState initial_state(std::size_t batch) const;

    // prev: one token per row; ctx: [b, D].
    DecoderStep step(const std::vector<int>& prev, const Tensor& ctx, const DecoderState& state) const;

    // Sequences start with BOS and end with EOS, optionally followed by PAD.
    // `v` holds one node set per sequence ([n, K, D]) or a single [K, D] set
    // for a single sequence.
    NllResult teacher_forced_nll(const NodeSet& v, const std::vector<std::vector<int>>& sequences) const;

    // Greedy argmax decoding (lowest index wins ties) from BOS until EOS or
    // max_len tokens; the result excludes BOS and EOS.
    std::vector<std::vector<int>> greedy_decode(const NodeSet& v, std::size_t max_len) const;

private:
    DecoderConfig config_;
    Tensor embedding_, w_input_, w_hidden_, bias_, w_out_, b_out_;
};

} // namespace l2c
