#include "l2c/training.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "l2c/errors.hpp"
#include "l2c/ops.hpp"

namespace l2c {
namespace {

constexpr std::uint64_t kPairStream = 1;
constexpr std::uint64_t kSingleStream = 2;
constexpr std::uint64_t kCaptionStream = 3;
constexpr std::size_t kMapSize = 8;
constexpr std::size_t kEvalBatch = 64;

std::vector<std::vector<int>> encode_all(const std::vector<std::string>& captions, const Vocab& vocab) {
    std::vector<std::vector<int>> out;
    for (const auto& c : captions) {
        out.push_back(vocab.encode(c));
    }
    return out;
}

// Which reference a sample trains on.
const std::vector<int>& choose_tokens(const std::vector<std::vector<int>>& tokens, const Config& cfg,
                                      std::uint64_t stream, std::size_t iteration, std::size_t slot) {
    if (cfg.caption_choice == "canonical" || tokens.size() == 1) {
        return tokens.front();
    }
    Rng rng(mix_seed(mix_seed(cfg.seed, kCaptionStream + 16 * stream), iteration * 1000003ULL + slot));
    return tokens[rng.below(tokens.size())];
}

std::string format_losses(const LossReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "l_diff=%.6g l_single=%.6g l_tv=%.6g total=%.6g", r.l_diff, r.l_single, r.l_tv,
                  r.total);
    return buf;
}

// Parameters that no active pathway reached still need a gradient buffer
// for the optimizer; theirs is zero.
void fill_missing_grads(ParameterStore& store) {
    for (auto& [_, p] : store.parameters()) {
        p.impl()->grad_buffer();
    }
}

} // namespace

std::vector<PairExample> prepare_pairs(const std::vector<PairRecord>& records, const Vocab& vocab,
                                       const std::filesystem::path& base_dir) {
    std::vector<PairExample> out;
    for (const auto& r : records) {
        RenderedImage a = load_image(r.a, base_dir), b = load_image(r.b, base_dir);
        out.push_back({r.id, a.image, pool_mask(a.mask, kMapSize, kMapSize), b.image,
                       pool_mask(b.mask, kMapSize, kMapSize), r.captions, encode_all(r.captions, vocab)});
    }
    return out;
}

std::vector<SingleExample> prepare_singles(const std::vector<SingleRecord>& records, const Vocab& vocab,
                                           const std::filesystem::path& base_dir) {
    std::vector<SingleExample> out;
    for (const auto& r : records) {
        RenderedImage img = load_image(r.image, base_dir);
        out.push_back({r.id, img.image, pool_mask(img.mask, kMapSize, kMapSize), r.captions,
                       encode_all(r.captions, vocab)});
    }
    return out;
}

TrainingData prepare_data(const GeneratedDataset& ds) {
    TrainingData d;
    d.vocab = Vocab::build(training_corpus(ds));
    d.train = prepare_pairs(ds.train, d.vocab);
    d.val = prepare_pairs(ds.val, d.vocab);
    d.singles = prepare_singles(ds.singles, d.vocab);
    return d;
}

TrainingData load_training_data(const std::filesystem::path& dir) {
    TrainingData d;
    d.vocab = Vocab::load(vocab_path(dir));
    d.train = prepare_pairs(read_pairs_jsonl(pair_split_path(dir, "train")), d.vocab, dir);
    d.val = prepare_pairs(read_pairs_jsonl(pair_split_path(dir, "val")), d.vocab, dir);
    if (std::filesystem::exists(singles_path(dir))) {
        d.singles = prepare_singles(read_singles_jsonl(singles_path(dir)), d.vocab, dir);
    }
    return d;
}

std::vector<std::size_t> sample_batch(std::uint64_t seed, std::uint64_t stream, std::size_t n, std::size_t batch,
                                      std::size_t iteration) {
    if (n == 0) {
        throw std::invalid_argument("sample_batch: empty dataset");
    }
    std::vector<std::size_t> out;
    std::vector<std::size_t> perm;
    std::size_t perm_epoch = SIZE_MAX;
    for (std::size_t j = 0; j < batch; ++j) {
        const std::size_t pos = iteration * batch + j;
        const std::size_t epoch = pos / n;
        if (epoch != perm_epoch) {
            perm.resize(n);
            std::iota(perm.begin(), perm.end(), 0);
            Rng rng(mix_seed(mix_seed(seed, stream), epoch));
            rng.shuffle(perm);
            perm_epoch = epoch;
        }
        out.push_back(perm[pos % n]);
    }
    return out;
}

LossReport LossTerms::report() const { return {l_diff.item(), l_single.item(), l_tv.item(), total.item()}; }

Trainer::Trainer(const Config& config, const TrainingData& data)
    : data_(data), model_(config, data.vocab.size()) {
    if (data_.train.empty()) {
        throw std::invalid_argument("trainer: no training pairs");
    }
    if (!config.no_single_task && data_.singles.empty()) {
        throw std::invalid_argument("trainer: single-caption task enabled but no single-image records");
    }
}

void Trainer::restore(const std::map<std::string, Tensor>& weights, const AdamState& adam, std::size_t iteration) {
    model_.store().assign_from(weights);
    adam_ = adam;
    for (auto* moments : {&adam_.m, &adam_.v}) {
        for (auto& [_, t] : *moments) {
            t = t.detach();
        }
    }
    iteration_ = iteration;
}

std::vector<std::size_t> Trainer::pair_batch(std::size_t iteration) const {
    return sample_batch(config().seed, kPairStream, data_.train.size(), config().batch_pair, iteration);
}

std::vector<std::size_t> Trainer::single_batch(std::size_t iteration) const {
    if (config().no_single_task) {
        return {};
    }
    return sample_batch(config().seed, kSingleStream, data_.singles.size(), config().batch_single, iteration);
}

LossTerms Trainer::losses(const std::vector<std::size_t>& pairs, const std::vector<std::size_t>& singles,
                          std::size_t iteration) {
    if (pairs.empty()) {
        throw std::invalid_argument("train_step: empty pair batch");
    }
    if (!config().no_single_task && singles.empty()) {
        throw std::invalid_argument("train_step: empty single-image batch");
    }
    const Config& cfg = config();
    LossTerms t;
    t.l_single = Tensor::scalar(0.0);
    t.l_tv = Tensor::scalar(0.0);

    std::vector<Tensor> images, masks;
    std::vector<std::vector<int>> seqs;
    for (std::size_t i : pairs) {
        images.push_back(data_.train[i].image_a);
        masks.push_back(data_.train[i].mask_a);
    }
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        const PairExample& ex = data_.train[pairs[j]];
        images.push_back(ex.image_b);
        masks.push_back(ex.mask_b);
        seqs.push_back(choose_tokens(ex.tokens, cfg, kPairStream, iteration, j));
    }
    NodeOutput pair_out = model_.enhanced_nodes(ops::stack(images), ops::stack(masks), true);
    t.l_diff = model_.decoder().teacher_forced_nll(Model::pair_difference(pair_out.nodes), seqs).mean;

    Tensor tv_total = tv_sum(pair_out.confidence);
    double tv_count = double(pair_out.confidence.size());
    if (!cfg.no_single_task) {
        images.clear();
        masks.clear();
        seqs.clear();
        for (std::size_t j = 0; j < singles.size(); ++j) {
            const SingleExample& ex = data_.singles[singles[j]];
            images.push_back(ex.image);
            masks.push_back(ex.mask);
            seqs.push_back(choose_tokens(ex.tokens, cfg, kSingleStream, iteration, j));
        }
        NodeOutput single_out = model_.enhanced_nodes(ops::stack(images), ops::stack(masks), true);
        t.l_single = model_.decoder().teacher_forced_nll(single_out.nodes, seqs).mean;
        tv_total = ops::add(tv_total, tv_sum(single_out.confidence));
        tv_count += double(single_out.confidence.size());
    }
    if (!cfg.no_tv) {
        t.l_tv = ops::scale(tv_total, 1.0 / tv_count);
    }
    t.total = ops::add(ops::add(t.l_diff, t.l_single), ops::scale(t.l_tv, cfg.lambda_tv));
    return t;
}

LossReport Trainer::train_step() {
    ParameterStore& store = model_.store();
    store.zero_grad();
    LossTerms t = losses(pair_batch(iteration_), single_batch(iteration_), iteration_);
    const LossReport report = t.report();
    backward(t.total);
    fill_missing_grads(store);
    if (config().clip_norm > 0.0) {
        clip_grad_norm(store, config().clip_norm);
    }
    adam_step(store, adam_, config().lr);
    ++iteration_;
    last_ = report;
    return report;
}

EvalReport evaluate(Model& model, const std::vector<PairExample>& pairs, const Vocab& vocab,
                    const std::string& split) {
    std::vector<std::string> ids, hyps;
    std::vector<std::vector<std::string>> refs;
    for (std::size_t start = 0; start < pairs.size(); start += kEvalBatch) {
        const std::size_t end = std::min(pairs.size(), start + kEvalBatch);
        std::vector<Tensor> ia, ma, ib, mb;
        for (std::size_t i = start; i < end; ++i) {
            ia.push_back(pairs[i].image_a);
            ma.push_back(pairs[i].mask_a);
            ib.push_back(pairs[i].image_b);
            mb.push_back(pairs[i].mask_b);
        }
        auto decoded = model.caption_pairs(ops::stack(ia), ops::stack(ma), ops::stack(ib), ops::stack(mb));
        for (std::size_t i = start; i < end; ++i) {
            ids.push_back(pairs[i].id);
            hyps.push_back(vocab.decode(decoded[i - start]));
            refs.push_back(pairs[i].captions);
        }
    }
    return score_corpus(split, ids, hyps, refs);
}

FitResult fit(Trainer& trainer, const TrainingData& data, const std::function<void(const MetricRecord&)>& on_eval) {
    FitResult result;
    const Config& cfg = trainer.config();
    LossReport last_finite = trainer.last_loss();
    while (trainer.iteration() < cfg.max_iters) {
        LossReport step;
        try {
            step = trainer.train_step();
        } catch (const NumericError& e) {
            throw DivergenceError("training diverged at iteration " + std::to_string(trainer.iteration()) + " (" +
                                  e.what() + "); last finite losses: " + format_losses(last_finite));
        }
        if (!std::isfinite(step.total)) {
            throw DivergenceError("training diverged at iteration " + std::to_string(trainer.iteration()) +
                                  "; last finite losses: " + format_losses(last_finite));
        }
        last_finite = step;
        result.losses.push_back(step);
        if (trainer.iteration() % cfg.eval_every == 0) {
            const EvalReport rep = evaluate(trainer.model(), data.val, data.vocab, "val");
            HistoryEntry entry{{trainer.iteration(), rep.bleu4, rep.rouge_l, rep.cider_d, step},
                               trainer.model().store().snapshot(),
                               trainer.adam()};
            entry.adam.m.clear();
            entry.adam.v.clear();
            for (const auto& [name, t] : trainer.adam().m) {
                entry.adam.m[name] = t.detach();
            }
            for (const auto& [name, t] : trainer.adam().v) {
                entry.adam.v[name] = t.detach();
            }
            if (on_eval) {
                on_eval(entry.metrics);
            }
            result.history.push_back(std::move(entry));
        }
    }
    return result;
}

std::size_t select_best(const std::vector<MetricRecord>& history) {
    if (history.empty()) {
        throw std::invalid_argument("select_best: empty history");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i].rouge_l > history[best].rouge_l) {
            best = i;
        }
    }
    return best;
}

std::size_t select_best(const std::vector<HistoryEntry>& history) {
    std::vector<MetricRecord> metrics;
    for (const auto& h : history) {
        metrics.push_back(h.metrics);
    }
    return select_best(metrics);
}

} // namespace l2c
