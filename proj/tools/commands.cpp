#include "commands.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "l2c/checkpoint.hpp"
#include "l2c/data.hpp"
#include "l2c/encoder.hpp"
#include "l2c/errors.hpp"
#include "l2c/gradcheck_suite.hpp"
#include "l2c/ops.hpp"
#include "l2c/training.hpp"

namespace l2c::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_dir(const fs::path& dir, const char* what) {
    if (!fs::is_directory(dir)) {
        throw UsageError(std::string(what) + " directory not found: " + dir.string());
    }
}

std::vector<std::pair<std::string, std::string>> config_entries(const Config& c) {
    return c.entries();
}

void print_eval(std::ostream& err, const MetricRecord& m) {
    err << "iter " << m.iteration << "  loss " << num(m.loss.total) << "  val bleu4 " << m.bleu4 << " rouge_l "
        << m.rouge_l << " cider_d " << m.cider_d << "\n";
}

std::string history_csv(const std::vector<MetricRecord>& history) {
    std::string s = "iteration,l_diff,l_single,l_tv,total,val_bleu4,val_rouge_l,val_cider_d\n";
    for (const MetricRecord& m : history) {
        s += std::to_string(m.iteration) + "," + num(m.loss.l_diff) + "," + num(m.loss.l_single) + "," +
             num(m.loss.l_tv) + "," + num(m.loss.total) + "," + num(m.bleu4) + "," + num(m.rouge_l) + "," +
             num(m.cider_d) + "\n";
    }
    return s;
}

std::string losses_csv(const std::vector<LossReport>& losses, std::size_t first_iteration) {
    std::string s = "iteration,l_diff,l_single,l_tv,total\n";
    for (std::size_t i = 0; i < losses.size(); ++i) {
        const LossReport& r = losses[i];
        s += std::to_string(first_iteration + i + 1) + "," + num(r.l_diff) + "," + num(r.l_single) + "," +
             num(r.l_tv) + "," + num(r.total) + "\n";
    }
    return s;
}

std::vector<PairExample> load_split(const fs::path& data, const std::string& split, const Vocab& vocab) {
    return prepare_pairs(read_pairs_jsonl(pair_split_path(data, split)), vocab, data);
}

CreatureSpec parse_spec(const std::string& arg) {
    const std::string text = !arg.empty() && arg[0] == '@' ? read_text(arg.substr(1)) : arg;
    try {
        return spec_from_json(text);
    } catch (const std::exception& e) {
        throw UsageError("invalid creature spec: " + std::string(e.what()));
    }
}

// Confidence channels and node rows of one forward pass on `pairs[0]`.
std::pair<std::size_t, std::size_t> node_plumbing(Model& model, const PairExample& ex) {
    NoGradGuard no_grad;
    const Tensor images = ops::stack({ex.image_a});
    const Tensor masks = ops::stack({ex.mask_a});
    const FeatureBundle fb = model.encoder().encode(images, masks, false);
    const NodeOutput nodes = model.enhanced_nodes(images, masks, false);
    return {fb.confidence.dim(1), nodes.nodes.num_nodes()};
}

} // namespace

std::string git_blob_sha1(const std::string& bytes) {
    const std::string header = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
        EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("sha1 digest failed");
    }
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string RunManifest::input_hash() const {
    std::vector<std::string> lines;
    for (const ManifestInput& in : inputs) {
        lines.push_back(in.sha1 + " " + in.name + "\n");
    }
    std::sort(lines.begin(), lines.end());
    std::string text;
    for (const std::string& l : lines) {
        text += l;
    }
    for (const auto& [key, value] : config) {
        text += key + "=" + value + "\n";
    }
    return git_blob_sha1(text);
}

std::string RunManifest::to_json() const {
    json j;
    j["command"] = command;
    j["seed"] = seed;
    json cfg = json::object();
    for (const auto& [key, value] : config) {
        cfg[key] = value;
    }
    j["config"] = cfg;
    j["input_hash"] = input_hash();
    json ins = json::array();
    for (const ManifestInput& in : inputs) {
        ins.push_back({{"name", in.name}, {"sha1", in.sha1}});
    }
    j["inputs"] = ins;
    j["outputs"] = outputs;
    return j.dump(2) + "\n";
}

void write_run_manifest(const RunManifest& manifest, const fs::path& dir) {
    fs::create_directories(dir);
    write_text(dir / "run_manifest.json", manifest.to_json());
}

std::vector<ManifestInput> hash_inputs(const fs::path& dir, const std::string& prefix) {
    std::vector<ManifestInput> out;
    if (fs::is_regular_file(dir)) {
        out.push_back({prefix + dir.filename().generic_string(), git_blob_sha1(read_text(dir))});
        return out;
    }
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().filename() != "run_manifest.json") {
            out.push_back({prefix + fs::relative(e.path(), dir).generic_string(), git_blob_sha1(read_text(e.path()))});
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return out;
}

Config resolve_config(const ConfigOptions& options, const Config* base) {
    Config c = base != nullptr ? *base : Config::preset(options.preset);
    if (options.config_file) {
        if (!fs::is_regular_file(*options.config_file)) {
            throw UsageError("config file not found: " + options.config_file->string());
        }
        c.apply_file(options.config_file->string());
    }
    for (const std::string& kv : options.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw UsageError("--set expects key=value, got '" + kv + "'");
        }
        c.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (options.seed) {
        c.seed = *options.seed;
    }
    if (options.max_iters) {
        c.max_iters = *options.max_iters;
    }
    c.no_gcn = c.no_gcn || options.no_gcn;
    c.no_semantic_pool = c.no_semantic_pool || options.no_semantic_pool;
    c.no_tv = c.no_tv || options.no_tv;
    c.no_single_task = c.no_single_task || options.no_single_task;
    c.validate();
    return c;
}

int cmd_gen_data(const GenDataOptions& o, std::ostream& out, std::ostream& err) {
    if (o.out.empty()) {
        throw UsageError("--out is required");
    }
    GeneratedDataset ds;
    try {
        ds = generate_dataset(o.seed, o.n_pairs, o.n_singles, {o.train_frac, o.val_frac, o.test_frac});
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto paths = write_dataset(ds, o.out);
    RunManifest m;
    m.command = "gen-data";
    m.seed = o.seed;
    m.config = {{"seed", std::to_string(o.seed)},       {"n_pairs", std::to_string(o.n_pairs)},
                {"n_singles", std::to_string(o.n_singles)}, {"train_frac", num(o.train_frac)},
                {"val_frac", num(o.val_frac)},          {"test_frac", num(o.test_frac)}};
    json files = json::array();
    for (const auto& p : paths) {
        m.outputs.push_back(p.generic_string());
        files.push_back(p.generic_string());
    }
    write_run_manifest(m, o.out);
    err << "wrote " << ds.train.size() << " train / " << ds.val.size() << " val / " << ds.test.size()
        << " test pairs and " << ds.singles.size() << " singles to " << o.out.string() << "\n";
    json summary;
    summary["command"] = "gen-data";
    summary["train"] = ds.train.size();
    summary["val"] = ds.val.size();
    summary["test"] = ds.test.size();
    summary["singles"] = ds.singles.size();
    summary["files"] = files;
    out << summary.dump() << "\n";
    return kExitOk;
}

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
    require_dir(o.data, "dataset");
    if (o.out.empty()) {
        throw UsageError("--out is required");
    }
    const TrainingData data = load_training_data(o.data);
    std::unique_ptr<Trainer> trainer;
    std::vector<MetricRecord> prior;
    std::optional<Checkpoint> prior_best;
    Config cfg;
    if (o.resume) {
        require_dir(*o.resume, "checkpoint");
        Checkpoint ckpt = load_checkpoint(*o.resume);
        if (!(ckpt.vocab == data.vocab)) {
            throw FormatError("resume: checkpoint vocabulary does not match " + vocab_path(o.data).string());
        }
        cfg = resolve_config(o.config, &ckpt.config);
        ckpt.config = cfg;
        for (const MetricRecord& m : ckpt.history) {
            if (m.iteration <= ckpt.iteration) {
                prior.push_back(m);
            }
        }
        if (!prior.empty()) {
            const fs::path best_dir = o.resume->parent_path() / "best";
            if (fs::is_directory(best_dir)) {
                prior_best = load_checkpoint(best_dir);
            }
        }
        trainer = trainer_from_checkpoint(ckpt, data);
        err << "resuming at iteration " << ckpt.iteration << " from " << o.resume->string() << "\n";
    } else {
        cfg = resolve_config(o.config);
        trainer = std::make_unique<Trainer>(cfg, data);
    }
    const std::size_t start = trainer->iteration();
    const FitResult fit_result = fit(*trainer, data, [&err](const MetricRecord& m) { print_eval(err, m); });

    std::vector<MetricRecord> history = prior;
    for (const MetricRecord& m : metric_history(fit_result.history)) {
        history.push_back(m);
    }
    fs::create_directories(o.out);
    RunManifest manifest;
    manifest.command = "train";
    manifest.seed = cfg.seed;
    manifest.config = config_entries(cfg);
    manifest.inputs = hash_inputs(o.data, "data/");
    if (o.resume) {
        for (auto& in : hash_inputs(*o.resume, "resume/")) {
            manifest.inputs.push_back(in);
        }
    }

    json summary;
    summary["command"] = "train";
    summary["iterations"] = trainer->iteration();
    if (!history.empty()) {
        const std::size_t best = select_best(history);
        Checkpoint best_ckpt;
        if (best >= prior.size()) {
            best_ckpt = checkpoint_from_entry(fit_result.history[best - prior.size()], cfg, data.vocab, history, best);
        } else {
            if (!prior_best || prior_best->iteration != history[best].iteration) {
                throw std::runtime_error("resume: best checkpoint for iteration " +
                                         std::to_string(history[best].iteration) + " not found next to " +
                                         o.resume->string());
            }
            best_ckpt = *prior_best;
            best_ckpt.config = cfg;
            best_ckpt.history = history;
            best_ckpt.selected = best;
        }
        save_checkpoint(best_ckpt, o.out / "best");
        manifest.outputs.push_back((o.out / "best").generic_string());
        summary["best_iteration"] = history[best].iteration;
        summary["val_bleu4"] = history[best].bleu4;
        summary["val_rouge_l"] = history[best].rouge_l;
        summary["val_cider_d"] = history[best].cider_d;
    } else {
        err << "no evaluation ran (max_iters < eval_every); only last/ is written\n";
    }
    save_checkpoint(capture_checkpoint(*trainer, data.vocab, history), o.out / "last");
    write_text(o.out / "history.csv", history_csv(history));
    write_text(o.out / "losses.csv", losses_csv(fit_result.losses, start));
    for (const char* name : {"last", "history.csv", "losses.csv"}) {
        manifest.outputs.push_back((o.out / name).generic_string());
    }
    write_run_manifest(manifest, o.out);
    summary["out"] = o.out.generic_string();
    out << summary.dump() << "\n";
    return kExitOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
    require_dir(o.ckpt, "checkpoint");
    require_dir(o.data, "dataset");
    const Checkpoint ckpt = load_checkpoint(o.ckpt);
    const Vocab vocab = Vocab::load(vocab_path(o.data));
    if (!(vocab == ckpt.vocab)) {
        throw FormatError("eval: checkpoint vocabulary does not match " + vocab_path(o.data).string());
    }
    const auto pairs = load_split(o.data, o.split, vocab);
    auto model = model_from_checkpoint(ckpt);
    const EvalReport report = evaluate(*model, pairs, vocab, o.split);
    const std::string text = report_to_json(report, o.scale, o.per_example);
    err << o.split << ": " << report.n_examples << " pairs, rouge_l " << report.rouge_l << "\n";
    if (o.out) {
        fs::create_directories(*o.out);
        write_text(*o.out / "report.json", text + "\n");
        RunManifest m;
        m.command = "eval";
        m.seed = ckpt.config.seed;
        m.config = config_entries(ckpt.config);
        m.config.push_back({"split", o.split});
        m.config.push_back({"display_scale", num(o.scale)});
        m.inputs = hash_inputs(o.ckpt, "ckpt/");
        for (auto& in : hash_inputs(o.data, "data/")) {
            m.inputs.push_back(in);
        }
        m.outputs = {(*o.out / "report.json").generic_string()};
        write_run_manifest(m, *o.out);
    }
    out << text << "\n";
    return kExitOk;
}

int cmd_caption(const CaptionOptions& o, std::ostream& out, std::ostream&) {
    require_dir(o.ckpt, "checkpoint");
    const CreatureSpec a = parse_spec(o.spec_a), b = parse_spec(o.spec_b);
    const Checkpoint ckpt = load_checkpoint(o.ckpt);
    auto model = model_from_checkpoint(ckpt);
    const EncoderConfig ec = encoder_config(ckpt.config);
    const RenderedImage ra = render(a), rb = render(b);
    const auto ids = model->caption_pairs(ops::stack({ra.image}), ops::stack({pool_mask(ra.mask, ec.map_h, ec.map_w)}),
                                          ops::stack({rb.image}), ops::stack({pool_mask(rb.mask, ec.map_h, ec.map_w)}));
    const std::string caption = ckpt.vocab.decode(ids.at(0));
    if (o.out) {
        fs::create_directories(*o.out);
        write_text(*o.out / "caption.txt", caption + "\n");
        RunManifest m;
        m.command = "caption";
        m.seed = ckpt.config.seed;
        m.config = config_entries(ckpt.config);
        m.config.push_back({"spec_a", spec_to_json(a)});
        m.config.push_back({"spec_b", spec_to_json(b)});
        m.inputs = hash_inputs(o.ckpt, "ckpt/");
        m.outputs = {(*o.out / "caption.txt").generic_string()};
        write_run_manifest(m, *o.out);
    }
    out << caption << "\n";
    return kExitOk;
}

int cmd_gradcheck(const GradcheckCliOptions& o, std::ostream& out, std::ostream& err) {
    GradcheckOptions opts;
    opts.seed = o.seed;
    opts.tolerance = o.tolerance;
    const auto rows = run_gradcheck_suite(opts);
    const std::string table = format_gradcheck_table(rows, o.tolerance);
    const bool ok = all_passed(rows);
    if (o.out) {
        fs::create_directories(*o.out);
        write_text(*o.out / "gradcheck.txt", table);
        RunManifest m;
        m.command = "gradcheck";
        m.seed = o.seed;
        m.config = {{"seed", std::to_string(o.seed)}, {"tolerance", num(o.tolerance)}};
        m.outputs = {(*o.out / "gradcheck.txt").generic_string()};
        write_run_manifest(m, *o.out);
    }
    out << table;
    if (!ok) {
        err << "gradcheck: at least one check exceeded " << o.tolerance << "\n";
    }
    return ok ? kExitOk : kExitVerification;
}

int cmd_sweep_k(const SweepKOptions& o, std::ostream& out, std::ostream& err) {
    require_dir(o.data, "dataset");
    if (o.out.empty()) {
        throw UsageError("--out is required");
    }
    if (o.values.empty()) {
        throw UsageError("--values must list at least one K");
    }
    const TrainingData data = load_training_data(o.data);
    if (data.val.empty()) {
        throw UsageError("sweep-k needs a non-empty validation split");
    }
    const Config base = resolve_config(o.config);
    fs::create_directories(o.out);
    std::string csv = "k,best_iteration,val_bleu4,val_rouge_l,val_cider_d,n_val,confidence_channels,node_rows\n";
    RunManifest manifest;
    manifest.command = "sweep-k";
    manifest.seed = base.seed;
    manifest.config = config_entries(base);
    std::string values;
    for (std::size_t k : o.values) {
        values += (values.empty() ? "" : ",") + std::to_string(k);
    }
    manifest.config.push_back({"k_values", values});
    manifest.inputs = hash_inputs(o.data, "data/");
    for (std::size_t k : o.values) {
        Config cfg = base;
        cfg.num_nodes = k;
        try {
            cfg.validate();
        } catch (const ConfigError& e) {
            throw UsageError("K=" + std::to_string(k) + ": " + e.what());
        }
        err << "K=" << k << "\n";
        Trainer trainer(cfg, data);
        const FitResult r = fit(trainer, data, [&err](const MetricRecord& m) { print_eval(err, m); });
        if (r.history.empty()) {
            throw UsageError("sweep-k: max_iters < eval_every leaves nothing to select");
        }
        const auto history = metric_history(r.history);
        const std::size_t best = select_best(history);
        auto model = model_from_checkpoint(checkpoint_from_entry(r.history[best], cfg, data.vocab, history, best));
        const EvalReport rep = evaluate(*model, data.val, data.vocab, "val");
        const auto [channels, rows] = node_plumbing(*model, data.val.front());
        if (channels != k || rows != k) {
            throw std::runtime_error("sweep-k: K=" + std::to_string(k) + " produced " + std::to_string(channels) +
                                     " confidence channels and " + std::to_string(rows) + " node rows");
        }
        const fs::path dir = o.out / ("k" + std::to_string(k));
        fs::create_directories(dir);
        write_text(dir / "report.json", report_to_json(rep) + "\n");
        manifest.outputs.push_back((dir / "report.json").generic_string());
        csv += std::to_string(k) + "," + std::to_string(history[best].iteration) + "," + num(rep.bleu4) + "," +
               num(rep.rouge_l) + "," + num(rep.cider_d) + "," + std::to_string(rep.n_examples) + "," +
               std::to_string(channels) + "," + std::to_string(rows) + "\n";
    }
    write_text(o.out / "sweep_k.csv", csv);
    manifest.outputs.push_back((o.out / "sweep_k.csv").generic_string());
    write_run_manifest(manifest, o.out);
    out << csv;
    return kExitOk;
}

namespace {

void add_config_flags(CLI::App* app, ConfigOptions& c) {
    app->add_option("--preset", c.preset, "base configuration: desk or full")->check(CLI::IsMember({"desk", "full"}));
    app->add_option("--config", c.config_file, "key=value config file applied over the preset");
    app->add_option("--set", c.sets, "key=value override (repeatable)");
    app->add_option("--seed", c.seed, "random seed");
    app->add_option("--max-iters", c.max_iters, "training iterations");
    app->add_flag("--no-gcn", c.no_gcn, "bypass affinity and GCN");
    app->add_flag("--no-semantic-pool", c.no_semantic_pool, "masked average pooling instead of semantic pooling");
    app->add_flag("--no-tv", c.no_tv, "drop the TV loss");
    app->add_flag("--no-single-task", c.no_single_task, "drop the single-image caption loss");
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Visual comparison captioning: data generation, training, evaluation and verification"};
    app.name("l2c");
    app.require_subcommand(1);

    GenDataOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "generate the synthetic dataset");
    gen_cmd->add_option("--seed", gen.seed);
    gen_cmd->add_option("--n-pairs", gen.n_pairs);
    gen_cmd->add_option("--n-singles", gen.n_singles);
    gen_cmd->add_option("--train-frac", gen.train_frac);
    gen_cmd->add_option("--val-frac", gen.val_frac);
    gen_cmd->add_option("--test-frac", gen.test_frac);
    gen_cmd->add_option("--out", gen.out)->required();

    TrainOptions train;
    auto* train_cmd = app.add_subcommand("train", "train and keep the best-ROUGE-L checkpoint");
    train_cmd->add_option("--data", train.data)->required();
    train_cmd->add_option("--out", train.out)->required();
    train_cmd->add_option("--resume", train.resume, "checkpoint directory to continue from");
    add_config_flags(train_cmd, train.config);

    EvalOptions ev;
    auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a split");
    eval_cmd->add_option("--ckpt", ev.ckpt)->required();
    eval_cmd->add_option("--data", ev.data)->required();
    eval_cmd->add_option("--split", ev.split)->check(CLI::IsMember({"train", "val", "test"}));
    eval_cmd->add_option("--scale", ev.scale, "display scale for metrics (1 or 100)")
        ->check(CLI::IsMember({1.0, 100.0}));
    bool no_per_example = false;
    eval_cmd->add_flag("--no-per-example", no_per_example);
    eval_cmd->add_option("--out", ev.out, "also write report.json and a run manifest here");

    CaptionOptions cap;
    auto* caption_cmd = app.add_subcommand("caption", "describe the difference between two rendered creatures");
    caption_cmd->add_option("--ckpt", cap.ckpt)->required();
    caption_cmd->add_option("--pair-spec-a", cap.spec_a, "JSON spec or @file")->required();
    caption_cmd->add_option("--pair-spec-b", cap.spec_b, "JSON spec or @file")->required();
    caption_cmd->add_option("--out", cap.out);

    GradcheckCliOptions gc;
    auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference check of every gradient");
    gradcheck_cmd->add_option("--seed", gc.seed);
    gradcheck_cmd->add_option("--tolerance", gc.tolerance);
    gradcheck_cmd->add_option("--out", gc.out);

    SweepKOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep-k", "train and evaluate once per node count K");
    sweep_cmd->add_option("--values", sweep.values)->delimiter(',');
    sweep_cmd->add_option("--data", sweep.data)->required();
    sweep_cmd->add_option("--out", sweep.out)->required();
    add_config_flags(sweep_cmd, sweep.config);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    ev.per_example = !no_per_example;

    std::string name = app.get_subcommands().front()->get_name();
    try {
        if (*gen_cmd) {
            return cmd_gen_data(gen, out, err);
        }
        if (*train_cmd) {
            return cmd_train(train, out, err);
        }
        if (*eval_cmd) {
            return cmd_eval(ev, out, err);
        }
        if (*caption_cmd) {
            return cmd_caption(cap, out, err);
        }
        if (*gradcheck_cmd) {
            return cmd_gradcheck(gc, out, err);
        }
        return cmd_sweep_k(sweep, out, err);
    } catch (const UsageError& e) {
        err << "l2c " << name << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "l2c " << name << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "l2c " << name << ": " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace l2c::cli
