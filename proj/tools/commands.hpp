#pragma once

// Command implementations behind the l2c executable. Each command writes
// machine-readable output to `out`, diagnostics to `err`, and a
// run_manifest.json next to any files it produces.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2c/config.hpp"

namespace l2c::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitVerification = 3;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// SHA-1 of "blob <size>\0<bytes>", as git hashes file contents.
std::string git_blob_sha1(const std::string& bytes);

struct ManifestInput {
    std::string name;
    std::string sha1;
};

struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config;  // resolved, in order
    std::vector<ManifestInput> inputs;
    std::vector<std::string> outputs;

    // git_blob_sha1 over the sorted "<sha1> <name>" input lines followed by
    // the resolved config lines.
    std::string input_hash() const;
    std::string to_json() const;
};

void write_run_manifest(const RunManifest& manifest, const std::filesystem::path& dir);

// Hashes every regular file under `dir` (names relative to it).
std::vector<ManifestInput> hash_inputs(const std::filesystem::path& dir, const std::string& prefix);

struct GenDataOptions {
    std::uint64_t seed = 0;
    std::size_t n_pairs = 200;
    std::size_t n_singles = 400;
    double train_frac = 0.8;
    double val_frac = 0.1;
    double test_frac = 0.1;
    std::filesystem::path out;
};

struct ConfigOptions {
    std::string preset = "desk";
    std::optional<std::filesystem::path> config_file;
    std::vector<std::string> sets;  // key=value
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> max_iters;
    bool no_gcn = false;
    bool no_semantic_pool = false;
    bool no_tv = false;
    bool no_single_task = false;
};

struct TrainOptions {
    std::filesystem::path data;
    std::filesystem::path out;
    ConfigOptions config;
    std::optional<std::filesystem::path> resume;
};

struct EvalOptions {
    std::filesystem::path ckpt;
    std::filesystem::path data;
    std::string split = "val";
    double scale = 1.0;
    bool per_example = true;
    std::optional<std::filesystem::path> out;
};

struct CaptionOptions {
    std::filesystem::path ckpt;
    std::string spec_a;  // JSON text, or @path
    std::string spec_b;
    std::optional<std::filesystem::path> out;
};

struct GradcheckCliOptions {
    std::uint64_t seed = 0;
    double tolerance = 1e-4;
    std::optional<std::filesystem::path> out;
};

struct SweepKOptions {
    std::vector<std::size_t> values{3, 6, 9, 12};
    std::filesystem::path data;
    std::filesystem::path out;
    ConfigOptions config;
};

// Base preset, then config file, then key=value overrides, then flags.
Config resolve_config(const ConfigOptions& options, const Config* base = nullptr);

int cmd_gen_data(const GenDataOptions& options, std::ostream& out, std::ostream& err);
int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_caption(const CaptionOptions& options, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckCliOptions& options, std::ostream& out, std::ostream& err);
int cmd_sweep_k(const SweepKOptions& options, std::ostream& out, std::ostream& err);

// Parses argv, dispatches, and maps exceptions to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace l2c::cli
