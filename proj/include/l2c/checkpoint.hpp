#pragma once

// Checkpoint directory: manifest.json (format version, iteration, config,
// metric history, tensor table with CRC-32 per file), vocab.txt, and one
// binary tensor file per parameter, buffer and Adam moment.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "l2c/adam.hpp"
#include "l2c/config.hpp"
#include "l2c/model.hpp"
#include "l2c/training.hpp"
#include "l2c/vocab.hpp"

namespace l2c {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
    int format_version = kCheckpointFormatVersion;
    std::size_t iteration = 0;
    Config config;
    Vocab vocab;
    std::map<std::string, Tensor> weights;  // parameters and buffers
    AdamState adam;
    std::vector<MetricRecord> history;
    // Index into history of the entry these weights belong to, if any.
    std::optional<std::size_t> selected;
};

// Deep copies of the trainer's current state.
Checkpoint capture_checkpoint(Trainer& trainer, const Vocab& vocab, const std::vector<MetricRecord>& history);
Checkpoint checkpoint_from_entry(const HistoryEntry& entry, const Config& config, const Vocab& vocab,
                                 const std::vector<MetricRecord>& history, std::size_t index);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
// Throws FormatError on version mismatch, missing or truncated files and
// checksum mismatches.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

std::unique_ptr<Model> model_from_checkpoint(const Checkpoint& ckpt);
// Continues training from the checkpoint's iteration with its optimizer state.
std::unique_ptr<Trainer> trainer_from_checkpoint(const Checkpoint& ckpt, const TrainingData& data);

std::vector<MetricRecord> metric_history(const std::vector<HistoryEntry>& history);

} // namespace l2c
