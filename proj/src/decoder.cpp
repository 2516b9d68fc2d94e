#include "l2c/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "l2c/errors.hpp"
#include "l2c/init.hpp"
#include "l2c/ops.hpp"
#include "l2c/tokens.hpp"

namespace l2c {

Decoder::Decoder(const DecoderConfig& config, ParameterStore& store, Rng& rng, const std::string& prefix)
    : config_(config) {
    if (config_.vocab_size <= static_cast<std::size_t>(kUnk)) {
        throw ConfigError("decoder: vocabulary must contain the four special tokens");
    }
    if (config_.embed_dim < 1 || config_.hidden < 1 || config_.context_dim < 1) {
        throw ConfigError("decoder: embed_dim, hidden and context_dim must be >= 1");
    }
    const std::size_t v = config_.vocab_size, e = config_.embed_dim, h = config_.hidden, d = config_.context_dim;
    embedding_ = store.add_parameter(prefix + ".embedding", uniform_tensor({v, e}, std::sqrt(3.0), rng));
    w_input_ = store.add_parameter(prefix + ".lstm.w_input", dense_init(e + d, 4 * h, rng));
    w_hidden_ = store.add_parameter(prefix + ".lstm.w_hidden", dense_init(h, 4 * h, rng));
    Tensor bias = Tensor::zeros({4 * h});
    for (std::size_t i = h; i < 2 * h; ++i) {
        bias[i] = 1.0;  // forget gate
    }
    bias_ = store.add_parameter(prefix + ".lstm.bias", bias);
    w_out_ = store.add_parameter(prefix + ".out.weight", dense_init(h, v, rng));
    b_out_ = store.add_parameter(prefix + ".out.bias", Tensor::zeros({v}));
}

Tensor Decoder::context(const NodeSet& v) const {
    if (v.dim() != config_.context_dim) {
        throw ShapeError("context: node dimension " + std::to_string(v.dim()) + " does not match D=" +
                         std::to_string(config_.context_dim));
    }
    return ops::mean_axis(v.nodes, v.nodes.rank() - 2);
}

DecoderState Decoder::initial_state(std::size_t batch) const {
    return {Tensor::zeros({batch, config_.hidden}), Tensor::zeros({batch, config_.hidden}), 0};
}

DecoderStep Decoder::step(const std::vector<int>& prev, const Tensor& ctx, const DecoderState& state) const {
    const std::size_t b = prev.size(), h = config_.hidden;
    if (ctx.rank() != 2 || ctx.dim(0) != b || ctx.dim(1) != config_.context_dim) {
        throw ShapeError("decode_step: context " + shape_str(ctx.shape()) + " does not match batch " +
                         std::to_string(b) + " and D=" + std::to_string(config_.context_dim));
    }
    for (int id : prev) {
        if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) {
            throw std::out_of_range("decode_step: token id " + std::to_string(id) + " outside vocabulary of " +
                                    std::to_string(config_.vocab_size));
        }
    }
    Tensor x = ops::concat({ops::embedding(embedding_, prev), ctx}, 1);
    Tensor z = ops::add_bias(ops::add(ops::matmul(x, w_input_), ops::matmul(state.h, w_hidden_)), bias_);
    DecoderStep out;
    out.input_gate = ops::sigmoid(ops::slice(z, 1, 0, h));
    out.forget_gate = ops::sigmoid(ops::slice(z, 1, h, 2 * h));
    out.candidate = ops::tanh(ops::slice(z, 1, 2 * h, 3 * h));
    out.output_gate = ops::sigmoid(ops::slice(z, 1, 3 * h, 4 * h));
    Tensor c = ops::add(ops::mul(out.forget_gate, state.c), ops::mul(out.input_gate, out.candidate));
    Tensor hn = ops::mul(out.output_gate, ops::tanh(c));
    out.logits = ops::add_bias(ops::matmul(hn, w_out_), b_out_);
    out.state = {hn, c, state.t + 1};
    return out;
}

namespace {

Tensor batch_context(const Decoder& dec, const NodeSet& v, std::size_t batch) {
    Tensor ctx = dec.context(v);
    if (ctx.rank() == 1) {
        ctx = ops::reshape(ctx, {1, ctx.dim(0)});
    }
    if (ctx.dim(0) != batch) {
        throw ShapeError("decoder: " + std::to_string(ctx.dim(0)) + " node sets for " + std::to_string(batch) +
                         " sequences");
    }
    return ctx;
}

} // namespace

NllResult Decoder::teacher_forced_nll(const NodeSet& v, const std::vector<std::vector<int>>& sequences) const {
    if (sequences.empty()) {
        throw std::invalid_argument("teacher_forced_nll: empty batch");
    }
    const std::size_t b = sequences.size();
    std::size_t steps = 0;
    for (const auto& seq : sequences) {
        std::size_t len = seq.size();
        while (len > 0 && seq[len - 1] == kPad) {
            --len;
        }
        if (len < 2) {
            throw std::invalid_argument("teacher_forced_nll: empty target sequence");
        }
        if (seq.front() != kBos || seq[len - 1] != kEos) {
            throw std::invalid_argument("teacher_forced_nll: sequences must start with BOS and end with EOS");
        }
        steps = std::max(steps, seq.size() - 1);
    }
    const Tensor ctx = batch_context(*this, v, b);
    DecoderState state = initial_state(b);
    NllResult out;
    out.sum = Tensor::scalar(0.0);
    std::vector<int> prev(b), target(b);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t r = 0; r < b; ++r) {
            const auto& seq = sequences[r];
            prev[r] = t < seq.size() ? seq[t] : kPad;
            target[r] = t + 1 < seq.size() ? seq[t + 1] : kPad;
            out.tokens += target[r] != kPad ? 1 : 0;
        }
        DecoderStep s = step(prev, ctx, state);
        out.sum = ops::add(out.sum, ops::cross_entropy_sum(s.logits, target, kPad));
        state = std::move(s.state);
    }
    out.mean = ops::scale(out.sum, 1.0 / static_cast<double>(out.tokens));
    return out;
}

std::vector<std::vector<int>> Decoder::greedy_decode(const NodeSet& v, std::size_t max_len) const {
    if (max_len < 1) {
        throw std::invalid_argument("greedy_decode: max_len must be >= 1");
    }
    NoGradGuard no_grad;
    const std::size_t b = v.batched() ? v.nodes.dim(0) : 1;
    const Tensor ctx = batch_context(*this, v, b);
    DecoderState state = initial_state(b);
    std::vector<std::vector<int>> out(b);
    std::vector<bool> done(b, false);
    std::vector<int> prev(b, kBos);
    const std::size_t vocab = config_.vocab_size;
    for (std::size_t t = 0; t < max_len; ++t) {
        DecoderStep s = step(prev, ctx, state);
        bool all_done = true;
        for (std::size_t r = 0; r < b; ++r) {
            if (done[r]) {
                prev[r] = kPad;
                continue;
            }
            const auto row = s.logits.data().subspan(r * vocab, vocab);
            const int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
            if (best == kEos) {
                done[r] = true;
            } else {
                out[r].push_back(best);
            }
            prev[r] = best;
            all_done = all_done && done[r];
        }
        if (all_done) {
            break;
        }
        state = std::move(s.state);
    }
    return out;
}

} // namespace l2c
