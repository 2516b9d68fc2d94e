#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "commands.hpp"
#include "l2c/data.hpp"
#include "l2c/tensor_io.hpp"

namespace l2c::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Result {
    int code;
    std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "l2c");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = run(int(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("l2c_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Same relative file set with identical bytes. Run manifests name their own
// output directory, so they are compared with that prefix removed.
void expect_same_tree(const fs::path& a, const fs::path& b) {
    std::size_t n = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (e.is_regular_file() && e.path().filename() == "run_manifest.json") {
            ++n;
            json ja = json::parse(slurp(e.path())), jb = json::parse(slurp(b / fs::relative(e.path(), a)));
            ja.erase("outputs");
            jb.erase("outputs");
            EXPECT_EQ(ja, jb);
        } else if (e.is_regular_file()) {
            ++n;
            const fs::path rel = fs::relative(e.path(), a);
            ASSERT_TRUE(fs::exists(b / rel)) << rel;
            EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
        }
    }
    std::size_t m = 0;
    for (const auto& e : fs::recursive_directory_iterator(b)) {
        m += e.is_regular_file() ? 1 : 0;
    }
    EXPECT_EQ(n, m);
}

// Dataset shared by the slower tests; paths inside manifests stay relative
// to the working directory, so everything runs from the scratch root.
struct Workspace {
    fs::path root = scratch("ws");
    Workspace() {
        fs::create_directories(root);
        fs::current_path(root);
        const Result r = run_cli({"gen-data", "--seed", "4", "--n-pairs", "30", "--n-singles", "20", "--out", "ds"});
        if (r.code != 0) {
            throw std::runtime_error(r.err);
        }
    }
};

const Workspace& ws() {
    static const Workspace w;
    fs::current_path(w.root);
    return w;
}

std::vector<std::string> quick_train(const std::string& out, std::vector<std::string> extra = {}) {
    std::vector<std::string> args{"train", "--data", "ds", "--out", out, "--max-iters", "12", "--set", "eval_every=4",
                                  "--set", "batch_pair=4", "--set", "batch_single=4"};
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

TEST(GitBlobSha1, MatchesGit) {
    EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(RunManifestHash, DependsOnInputsAndConfigNotOrder) {
    RunManifest a;
    a.config = {{"seed", "1"}};
    a.inputs = {{"x", "aa"}, {"y", "bb"}};
    RunManifest b = a;
    std::swap(b.inputs[0], b.inputs[1]);
    EXPECT_EQ(a.input_hash(), b.input_hash());
    b.inputs[0].sha1 = "cc";
    EXPECT_NE(a.input_hash(), b.input_hash());
    RunManifest c = a;
    c.config[0].second = "2";
    EXPECT_NE(a.input_hash(), c.input_hash());
}

TEST(GenData, WritesSplitsAndIsDeterministic) {
    ws();
    const Result r1 = run_cli({"gen-data", "--seed", "9", "--n-pairs", "20", "--n-singles", "5", "--out", "g1"});
    const Result r2 = run_cli({"gen-data", "--seed", "9", "--n-pairs", "20", "--n-singles", "5", "--out", "g2"});
    ASSERT_EQ(r1.code, 0) << r1.err;
    for (const char* split : {"train", "val", "test"}) {
        EXPECT_TRUE(fs::exists(pair_split_path("g1", split)));
    }
    EXPECT_TRUE(fs::exists("g1/run_manifest.json"));
    for (const char* f : {"pairs.train.jsonl", "pairs.val.jsonl", "pairs.test.jsonl", "singles.train.jsonl",
                          "vocab.txt"}) {
        EXPECT_EQ(slurp(fs::path("g1") / f), slurp(fs::path("g2") / f)) << f;
    }
    EXPECT_EQ(json::parse(r1.out)["train"], 16);
    const Result again = run_cli({"gen-data", "--seed", "9", "--n-pairs", "20", "--n-singles", "5", "--out", "g1"});
    EXPECT_EQ(again.out, r1.out);
}

TEST(GenData, InvalidFractionsAreUsageErrors) {
    ws();
    const Result r = run_cli({"gen-data", "--out", "bad", "--train-frac", "0.9", "--val-frac", "0.3"});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_TRUE(r.out.empty());
    EXPECT_NE(r.err.find("fractions"), std::string::npos);
}

TEST(Usage, BadInvocationsExitOne) {
    ws();
    EXPECT_EQ(run_cli({}).code, kExitUsage);
    EXPECT_EQ(run_cli({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run_cli({"train", "--data", "ds"}).code, kExitUsage);
    EXPECT_EQ(run_cli(quick_train("u1", {"--set", "learning_rate=3"})).code, kExitUsage);
    EXPECT_EQ(run_cli(quick_train("u2", {"--set", "lr"})).code, kExitUsage);
    EXPECT_EQ(run_cli({"train", "--data", "missing", "--out", "u3"}).code, kExitUsage);
    EXPECT_EQ(run_cli({"eval", "--ckpt", "x", "--data", "ds", "--split", "dev"}).code, kExitUsage);
    EXPECT_EQ(run_cli({"--help"}).code, kExitOk);
}

TEST(Train, AblationFlagRecordedInManifestAndCheckpoint) {
    ws();
    const Result r = run_cli(quick_train("t_nogcn", {"--no-gcn"}));
    ASSERT_EQ(r.code, 0) << r.err;
    const json manifest = json::parse(slurp("t_nogcn/run_manifest.json"));
    EXPECT_EQ(manifest["command"], "train");
    EXPECT_EQ(manifest["config"]["no_gcn"], "true");
    EXPECT_EQ(manifest["input_hash"].get<std::string>().size(), 40u);
    EXPECT_EQ(json::parse(slurp("t_nogcn/best/manifest.json"))["config"]["no_gcn"], "true");
    std::ifstream hist("t_nogcn/history.csv");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(hist, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, 1u + 3u);
    const json summary = json::parse(r.out);
    EXPECT_TRUE(summary.contains("best_iteration"));
}

TEST(Train, RerunAndResumeAreByteIdentical) {
    ws();
    ASSERT_EQ(run_cli(quick_train("t_a")).code, 0);
    ASSERT_EQ(run_cli(quick_train("t_b")).code, 0);
    expect_same_tree("t_a", "t_b");

    auto first = quick_train("t_c");
    first[6] = "8";  // --max-iters
    ASSERT_EQ(run_cli(first).code, 0);
    const Result resumed = run_cli(quick_train("t_c", {"--resume", "t_c/last"}));
    ASSERT_EQ(resumed.code, 0) << resumed.err;
    expect_same_tree("t_a/last", "t_c/last");
    expect_same_tree("t_a/best", "t_c/best");
    EXPECT_EQ(slurp("t_a/history.csv"), slurp("t_c/history.csv"));
}

TEST(Eval, ReportShapeAndBestReproducesRecordedScore) {
    ws();
    ASSERT_EQ(run_cli(quick_train("t_eval")).code, 0);
    const Result val = run_cli({"eval", "--ckpt", "t_eval/best", "--data", "ds", "--split", "val"});
    const Result test = run_cli({"eval", "--ckpt", "t_eval/best", "--data", "ds", "--split", "test"});
    ASSERT_EQ(val.code, 0) << val.err;
    ASSERT_EQ(test.code, 0) << test.err;
    const json jv = json::parse(val.out), jt = json::parse(test.out);
    for (const char* key : {"split", "bleu4", "rouge_l", "cider_d", "n_examples", "per_example"}) {
        EXPECT_TRUE(jv.contains(key)) << key;
        EXPECT_TRUE(jt.contains(key)) << key;
    }
    EXPECT_EQ(jv["split"], "val");
    EXPECT_EQ(jt["split"], "test");

    const json ckpt = json::parse(slurp("t_eval/best/manifest.json"));
    const std::size_t sel = ckpt["selected"];
    EXPECT_EQ(jv["rouge_l"].get<double>(), ckpt["history"][sel]["rouge_l"].get<double>());
    EXPECT_EQ(jv["bleu4"].get<double>(), ckpt["history"][sel]["bleu4"].get<double>());

    const Result again = run_cli({"eval", "--ckpt", "t_eval/best", "--data", "ds", "--split", "val"});
    EXPECT_EQ(again.out, val.out);
    const Result scaled =
        run_cli({"eval", "--ckpt", "t_eval/best", "--data", "ds", "--split", "val", "--scale", "100"});
    EXPECT_NEAR(json::parse(scaled.out)["rouge_l"].get<double>(), 100.0 * jv["rouge_l"].get<double>(), 1e-9);
}

TEST(Eval, VocabularyMismatchIsRuntimeError) {
    ws();
    ASSERT_EQ(run_cli(quick_train("t_vm")).code, 0);
    ASSERT_EQ(run_cli({"gen-data", "--seed", "77", "--n-pairs", "12", "--n-singles", "3", "--out", "other"}).code, 0);
    std::ofstream("other/vocab.txt", std::ios::app) << "zebra\n";
    const Result r = run_cli({"eval", "--ckpt", "t_vm/best", "--data", "other"});
    EXPECT_EQ(r.code, kExitRuntime);
    EXPECT_NE(r.err.find("vocabulary"), std::string::npos);
}

TEST(Eval, CorruptCheckpointIsRuntimeError) {
    ws();
    ASSERT_EQ(run_cli(quick_train("t_bad")).code, 0);
    const fs::path victim = "t_bad/best/tensors/decoder.embedding.bin";
    auto bytes = read_file_bytes(victim);
    bytes[bytes.size() / 2] ^= 1;
    write_file_bytes(victim, bytes);
    const Result r = run_cli({"eval", "--ckpt", "t_bad/best", "--data", "ds"});
    EXPECT_EQ(r.code, kExitRuntime);
    EXPECT_NE(r.err.find("checksum"), std::string::npos);
}

TEST(Caption, DeterministicAndSwapSafe) {
    ws();
    ASSERT_EQ(run_cli(quick_train("t_cap")).code, 0);
    const auto records = read_pairs_jsonl(pair_split_path("ds", "val"));
    const std::string a = spec_to_json(*records[0].a.spec), b = spec_to_json(*records[0].b.spec);
    const Result r1 = run_cli({"caption", "--ckpt", "t_cap/best", "--pair-spec-a", a, "--pair-spec-b", b});
    const Result r2 = run_cli({"caption", "--ckpt", "t_cap/best", "--pair-spec-a", a, "--pair-spec-b", b});
    const Result swapped = run_cli({"caption", "--ckpt", "t_cap/best", "--pair-spec-a", b, "--pair-spec-b", a});
    ASSERT_EQ(r1.code, 0) << r1.err;
    EXPECT_EQ(r1.out, r2.out);
    EXPECT_EQ(swapped.code, 0);
    EXPECT_EQ(r1.out.back(), '\n');
    std::ofstream("spec_a.json") << a;
    EXPECT_EQ(run_cli({"caption", "--ckpt", "t_cap/best", "--pair-spec-a", "@spec_a.json", "--pair-spec-b", b}).out,
              r1.out);
    EXPECT_EQ(run_cli({"caption", "--ckpt", "t_cap/best", "--pair-spec-a", "{\"size\":1}", "--pair-spec-b", b}).code,
              kExitUsage);
}

TEST(SweepK, FourRowsWithPlumbedK) {
    ws();
    std::vector<std::string> args{"sweep-k", "--values", "3,6,9,12", "--data", "ds", "--out", "sweep1",
                                  "--max-iters", "4", "--set", "eval_every=2", "--set", "batch_pair=4",
                                  "--set", "batch_single=4"};
    const Result r = run_cli(args);
    ASSERT_EQ(r.code, 0) << r.err;
    std::istringstream csv(r.out);
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "k,best_iteration,val_bleu4,val_rouge_l,val_cider_d,n_val,confidence_channels,node_rows");
    std::vector<std::string> ks;
    while (std::getline(csv, line)) {
        const std::string k = line.substr(0, line.find(','));
        ks.push_back(k);
        EXPECT_NE(line.find("," + k + "," + k), std::string::npos) << line;
    }
    EXPECT_EQ(ks, (std::vector<std::string>{"3", "6", "9", "12"}));
    EXPECT_EQ(slurp("sweep1/sweep_k.csv"), r.out);
    args[6] = "sweep2";
    ASSERT_EQ(run_cli(args).code, 0);
    EXPECT_EQ(slurp("sweep2/sweep_k.csv"), r.out);
    EXPECT_EQ(slurp("sweep1/k9/report.json"), slurp("sweep2/k9/report.json"));
}

// The executable itself: exit codes and stream separation.
int shell(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Executable, StreamsAndExitCodes) {
    ws();
    const std::string bin = L2C_BIN;
    EXPECT_EQ(shell(bin + " gen-data --seed 2 --n-pairs 10 --n-singles 2 --out exe_ds > exe_out.txt 2> exe_err.txt"),
              0);
    EXPECT_NO_THROW(json::parse(slurp("exe_out.txt")));
    EXPECT_NE(slurp("exe_err.txt").find("wrote"), std::string::npos);
    EXPECT_EQ(shell(bin + " gen-data --out exe_bad --val-frac 2 > /dev/null 2>&1"), 1);
    EXPECT_EQ(shell(bin + " eval --ckpt nowhere --data exe_ds > /dev/null 2>&1"), 1);
    EXPECT_EQ(shell(bin + " gradcheck --tolerance 1e-300 > gc_fail.txt 2> /dev/null"), 3);
    EXPECT_NE(slurp("gc_fail.txt").find("FAIL"), std::string::npos);
}

TEST(Executable, GradcheckPasses) {
    ws();
    EXPECT_EQ(shell(std::string(L2C_BIN) + " gradcheck --out gc > gc_ok.txt 2> /dev/null"), 0);
    const std::string table = slurp("gc_ok.txt");
    EXPECT_EQ(table.find("FAIL"), std::string::npos);
    EXPECT_NE(table.find(" 0 failed"), std::string::npos);
    EXPECT_TRUE(fs::exists("gc/run_manifest.json"));
}

} // namespace
} // namespace l2c::cli
