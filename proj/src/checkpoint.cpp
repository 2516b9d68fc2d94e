#include "l2c/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "l2c/errors.hpp"
#include "l2c/tensor_io.hpp"

namespace l2c {
namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::map<std::string, Tensor> deep_copy(const std::map<std::string, Tensor>& in) {
    std::map<std::string, Tensor> out;
    for (const auto& [name, t] : in) {
        out.emplace(name, t.detach());
    }
    return out;
}

AdamState deep_copy(const AdamState& in) {
    AdamState out = in;
    out.m = deep_copy(in.m);
    out.v = deep_copy(in.v);
    return out;
}

ordered_json metrics_json(const MetricRecord& m) {
    return ordered_json{{"iteration", m.iteration}, {"bleu4", m.bleu4},         {"rouge_l", m.rouge_l},
                        {"cider_d", m.cider_d},     {"l_diff", m.loss.l_diff},  {"l_single", m.loss.l_single},
                        {"l_tv", m.loss.l_tv},      {"total", m.loss.total}};
}

MetricRecord metrics_from(const ordered_json& j) {
    MetricRecord m;
    m.iteration = j.at("iteration").get<std::size_t>();
    m.bleu4 = j.at("bleu4").get<double>();
    m.rouge_l = j.at("rouge_l").get<double>();
    m.cider_d = j.at("cider_d").get<double>();
    m.loss = {j.at("l_diff").get<double>(), j.at("l_single").get<double>(), j.at("l_tv").get<double>(),
              j.at("total").get<double>()};
    return m;
}

struct TensorSlot {
    const char* kind;
    const char* subdir;
};

constexpr TensorSlot kWeights{"weight", "tensors"};
constexpr TensorSlot kAdamM{"adam_m", "adam_m"};
constexpr TensorSlot kAdamV{"adam_v", "adam_v"};

} // namespace

Checkpoint capture_checkpoint(Trainer& trainer, const Vocab& vocab, const std::vector<MetricRecord>& history) {
    Checkpoint c;
    c.iteration = trainer.iteration();
    c.config = trainer.config();
    c.vocab = vocab;
    c.weights = trainer.model().store().snapshot();
    c.adam = deep_copy(trainer.adam());
    c.history = history;
    return c;
}

Checkpoint checkpoint_from_entry(const HistoryEntry& entry, const Config& config, const Vocab& vocab,
                                 const std::vector<MetricRecord>& history, std::size_t index) {
    Checkpoint c;
    c.iteration = entry.metrics.iteration;
    c.config = config;
    c.vocab = vocab;
    c.weights = deep_copy(entry.weights);
    c.adam = deep_copy(entry.adam);
    c.history = history;
    c.selected = index;
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const fs::path& dir) {
    fs::create_directories(dir);
    ordered_json manifest;
    manifest["format_version"] = ckpt.format_version;
    manifest["iteration"] = ckpt.iteration;
    ordered_json cfg = ordered_json::object();
    for (const auto& [k, v] : ckpt.config.entries()) {
        cfg[k] = v;
    }
    manifest["config"] = cfg;
    manifest["vocab"] = "vocab.txt";
    manifest["adam"] = ordered_json{
        {"step", ckpt.adam.step}, {"beta1", ckpt.adam.beta1}, {"beta2", ckpt.adam.beta2}, {"eps", ckpt.adam.eps}};
    manifest["history"] = ordered_json::array();
    for (const auto& m : ckpt.history) {
        manifest["history"].push_back(metrics_json(m));
    }
    manifest["selected"] = ckpt.selected ? ordered_json(*ckpt.selected) : ordered_json(nullptr);

    ordered_json table = ordered_json::array();
    auto write_group = [&](const std::map<std::string, Tensor>& group, const TensorSlot& slot) {
        fs::create_directories(dir / slot.subdir);
        for (const auto& [name, t] : group) {
            const std::string rel = std::string(slot.subdir) + "/" + name + ".bin";
            const auto bytes = encode_tensor(t);
            write_file_bytes(dir / rel, bytes);
            table.push_back(ordered_json{
                {"name", name}, {"kind", slot.kind}, {"file", rel}, {"shape", t.shape()}, {"crc32", crc32_of(bytes)}});
        }
    };
    write_group(ckpt.weights, kWeights);
    write_group(ckpt.adam.m, kAdamM);
    write_group(ckpt.adam.v, kAdamV);
    manifest["tensors"] = table;

    ckpt.vocab.save(dir / "vocab.txt");
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) {
        throw FormatError("cannot write " + (dir / "manifest.json").string());
    }
    out << manifest.dump(2) << '\n';
}

Checkpoint load_checkpoint(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) {
        throw FormatError("checkpoint: cannot open " + manifest_path.string());
    }
    ordered_json manifest;
    try {
        manifest = ordered_json::parse(in);
    } catch (const ordered_json::exception& e) {
        throw FormatError("checkpoint: malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    Checkpoint c;
    try {
        c.format_version = manifest.at("format_version").get<int>();
        if (c.format_version != kCheckpointFormatVersion) {
            throw FormatError("checkpoint: format version " + std::to_string(c.format_version) + ", expected " +
                              std::to_string(kCheckpointFormatVersion));
        }
        c.iteration = manifest.at("iteration").get<std::size_t>();
        for (const auto& [k, v] : manifest.at("config").items()) {
            c.config.set(k, v.get<std::string>());
        }
        c.vocab = Vocab::load(dir / manifest.at("vocab").get<std::string>());
        const auto& adam = manifest.at("adam");
        c.adam.step = adam.at("step").get<std::int64_t>();
        c.adam.beta1 = adam.at("beta1").get<double>();
        c.adam.beta2 = adam.at("beta2").get<double>();
        c.adam.eps = adam.at("eps").get<double>();
        for (const auto& m : manifest.at("history")) {
            c.history.push_back(metrics_from(m));
        }
        if (!manifest.at("selected").is_null()) {
            c.selected = manifest.at("selected").get<std::size_t>();
        }
        for (const auto& entry : manifest.at("tensors")) {
            const std::string name = entry.at("name").get<std::string>();
            const std::string file = entry.at("file").get<std::string>();
            const auto bytes = read_file_bytes(dir / file);
            if (crc32_of(bytes) != entry.at("crc32").get<std::uint32_t>()) {
                throw FormatError("checkpoint: checksum mismatch for tensor " + name + " (" + file + ")");
            }
            Tensor t = decode_tensor(bytes);
            if (t.shape() != entry.at("shape").get<Shape>()) {
                throw FormatError("checkpoint: tensor " + name + " has shape " + shape_str(t.shape()) +
                                  ", manifest says otherwise");
            }
            const std::string kind = entry.at("kind").get<std::string>();
            auto& group = kind == kAdamM.kind ? c.adam.m : kind == kAdamV.kind ? c.adam.v : c.weights;
            group.emplace(name, t);
        }
    } catch (const ordered_json::exception& e) {
        throw FormatError("checkpoint: malformed manifest " + manifest_path.string() + ": " + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint: bad config snapshot: ") + e.what());
    }
    return c;
}

std::unique_ptr<Model> model_from_checkpoint(const Checkpoint& ckpt) {
    auto model = std::make_unique<Model>(ckpt.config, ckpt.vocab.size());
    model->store().assign_from(ckpt.weights);
    return model;
}

std::unique_ptr<Trainer> trainer_from_checkpoint(const Checkpoint& ckpt, const TrainingData& data) {
    if (!(ckpt.vocab == data.vocab)) {
        throw std::invalid_argument("resume: checkpoint vocabulary does not match the dataset vocabulary");
    }
    auto trainer = std::make_unique<Trainer>(ckpt.config, data);
    trainer->restore(ckpt.weights, ckpt.adam, ckpt.iteration);
    return trainer;
}

std::vector<MetricRecord> metric_history(const std::vector<HistoryEntry>& history) {
    std::vector<MetricRecord> out;
    for (const auto& h : history) {
        out.push_back(h.metrics);
    }
    return out;
}

} // namespace l2c
