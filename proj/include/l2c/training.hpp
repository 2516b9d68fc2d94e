#pragma once

// Alternating two-dataset optimisation of
//   total = L_diff + L_single + lambda * L_TV
// plus evaluation and ROUGE-L model selection.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "l2c/adam.hpp"
#include "l2c/config.hpp"
#include "l2c/data.hpp"
#include "l2c/metrics.hpp"
#include "l2c/model.hpp"
#include "l2c/vocab.hpp"

namespace l2c {

struct PairExample {
    std::string id;
    Tensor image_a, mask_a, image_b, mask_b;  // masks at map resolution
    std::vector<std::string> captions;
    std::vector<std::vector<int>> tokens;
};

struct SingleExample {
    std::string id;
    Tensor image, mask;
    std::vector<std::string> captions;
    std::vector<std::vector<int>> tokens;
};

struct TrainingData {
    Vocab vocab;
    std::vector<PairExample> train;
    std::vector<PairExample> val;
    std::vector<SingleExample> singles;
};

std::vector<PairExample> prepare_pairs(const std::vector<PairRecord>& records, const Vocab& vocab,
                                       const std::filesystem::path& base_dir = {});
std::vector<SingleExample> prepare_singles(const std::vector<SingleRecord>& records, const Vocab& vocab,
                                           const std::filesystem::path& base_dir = {});
TrainingData prepare_data(const GeneratedDataset& ds);
// Reads pairs.train / pairs.val / singles.train and the vocabulary.
TrainingData load_training_data(const std::filesystem::path& dir);

// Positions [iteration * batch, (iteration + 1) * batch) of the endless
// sequence formed by concatenating one seeded permutation of [0, n) per
// epoch. Stateless, so resuming at an iteration replays the same batches.
std::vector<std::size_t> sample_batch(std::uint64_t seed, std::uint64_t stream, std::size_t n, std::size_t batch,
                                      std::size_t iteration);

struct LossReport {
    double l_diff = 0.0;
    double l_single = 0.0;
    double l_tv = 0.0;
    double total = 0.0;
};

// Tape-tracked loss terms for one pair of mini-batches. Disabled terms are
// untracked zeros.
struct LossTerms {
    Tensor l_diff, l_single, l_tv, total;
    LossReport report() const;
};

struct MetricRecord {
    std::size_t iteration = 0;
    double bleu4 = 0.0;
    double rouge_l = 0.0;
    double cider_d = 0.0;
    LossReport loss;
};

struct HistoryEntry {
    MetricRecord metrics;
    std::map<std::string, Tensor> weights;  // parameters and buffers
    AdamState adam;
};

class Trainer {
public:
    Trainer(const Config& config, const TrainingData& data);

    const Config& config() const { return model_.config(); }
    Model& model() { return model_; }
    AdamState& adam() { return adam_; }
    std::size_t iteration() const { return iteration_; }
    const LossReport& last_loss() const { return last_; }

    // Replaces weights, optimizer state and iteration (resume).
    void restore(const std::map<std::string, Tensor>& weights, const AdamState& adam, std::size_t iteration);

    std::vector<std::size_t> pair_batch(std::size_t iteration) const;
    std::vector<std::size_t> single_batch(std::size_t iteration) const;

    // Forward pass of every enabled term on the given training examples.
    LossTerms losses(const std::vector<std::size_t>& pairs, const std::vector<std::size_t>& singles,
                     std::size_t iteration);

    // Samples the batches for the current iteration, takes one Adam step on
    // the total loss and advances the iteration.
    LossReport train_step();

private:
    const TrainingData& data_;
    Model model_;
    AdamState adam_;
    std::size_t iteration_ = 0;
    LossReport last_;
};

// Greedy captions for every pair, scored against all references. The
// model runs in evaluation mode.
EvalReport evaluate(Model& model, const std::vector<PairExample>& pairs, const Vocab& vocab,
                    const std::string& split);

struct FitResult {
    std::vector<HistoryEntry> history;
    std::vector<LossReport> losses;  // one per step taken by this call
};

// Runs train_step until config.max_iters, evaluating on data.val every
// eval_every iterations. Throws DivergenceError on a non-finite loss.
FitResult fit(Trainer& trainer, const TrainingData& data,
              const std::function<void(const MetricRecord&)>& on_eval = {});

// Index of the entry with the highest validation ROUGE-L, earliest on ties.
std::size_t select_best(const std::vector<MetricRecord>& history);
std::size_t select_best(const std::vector<HistoryEntry>& history);

} // namespace l2c
