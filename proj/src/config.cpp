#include "l2c/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "l2c/errors.hpp"

namespace l2c {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T out{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("config: bad value '" + text + "' for " + key);
    }
    return out;
}

double parse_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError("config: bad value '" + text + "' for " + key);
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no") {
        return false;
    }
    throw ConfigError("config: bad boolean '" + text + "' for " + key);
}

struct Field {
    const char* key;
    std::function<void(Config&, const std::string&)> set;
    std::function<std::string(const Config&)> get;
};

#define L2C_SIZE_FIELD(name)                                                                                 \
    Field {                                                                                                  \
        #name, [](Config& c, const std::string& v) { c.name = parse_number<std::size_t>(#name, v); },         \
            [](const Config& c) { return std::to_string(c.name); }                                           \
    }
#define L2C_DOUBLE_FIELD(name)                                                                               \
    Field {                                                                                                  \
        #name, [](Config& c, const std::string& v) { c.name = parse_double(#name, v); },                      \
            [](const Config& c) { return format_double(c.name); }                                            \
    }
#define L2C_BOOL_FIELD(name)                                                                                 \
    Field {                                                                                                  \
        #name, [](Config& c, const std::string& v) { c.name = parse_bool(#name, v); },                        \
            [](const Config& c) { return std::string(c.name ? "true" : "false"); }                           \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table{
        L2C_SIZE_FIELD(feature_dim),
        L2C_SIZE_FIELD(num_nodes),
        L2C_SIZE_FIELD(embed_dim),
        L2C_SIZE_FIELD(hidden),
        L2C_SIZE_FIELD(gcn_layers),
        L2C_DOUBLE_FIELD(lr),
        L2C_DOUBLE_FIELD(lambda_tv),
        L2C_SIZE_FIELD(batch_pair),
        L2C_SIZE_FIELD(batch_single),
        L2C_SIZE_FIELD(max_iters),
        L2C_SIZE_FIELD(eval_every),
        Field{"seed", [](Config& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); },
              [](const Config& c) { return std::to_string(c.seed); }},
        L2C_DOUBLE_FIELD(clip_norm),
        L2C_SIZE_FIELD(max_decode_len),
        Field{"caption_choice", [](Config& c, const std::string& v) { c.caption_choice = v; },
              [](const Config& c) { return c.caption_choice; }},
        L2C_BOOL_FIELD(no_semantic_pool),
        L2C_BOOL_FIELD(no_tv),
        L2C_BOOL_FIELD(no_gcn),
        L2C_BOOL_FIELD(no_single_task),
    };
    return table;
}

#undef L2C_SIZE_FIELD
#undef L2C_DOUBLE_FIELD
#undef L2C_BOOL_FIELD

} // namespace

Config Config::full() { return Config{}; }

Config Config::desk() {
    Config c;
    c.feature_dim = 32;
    c.num_nodes = 4;
    c.embed_dim = 32;
    c.hidden = 64;
    c.lr = 1e-3;
    c.batch_pair = 8;
    c.batch_single = 16;
    c.max_iters = 500;
    c.eval_every = 100;
    return c;
}

Config Config::preset(const std::string& name) {
    if (name == "full") {
        return full();
    }
    if (name == "desk") {
        return desk();
    }
    throw ConfigError("config: unknown preset '" + name + "' (expected desk or full)");
}

void Config::set(const std::string& key, const std::string& value) {
    const std::string k = trim(key), v = trim(value);
    for (const auto& f : fields()) {
        if (k == f.key) {
            f.set(*this, v);
            return;
        }
    }
    throw ConfigError("config: unknown key '" + k + "'");
}

void Config::apply_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        }
        set(line.substr(0, eq), line.substr(eq + 1));
    }
}

void Config::apply_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open " + path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    apply_text(text.str());
}

void Config::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) {
            throw ConfigError("config: " + what);
        }
    };
    require(feature_dim >= 1, "feature_dim must be >= 1");
    require(num_nodes >= 1, "num_nodes must be >= 1");
    require(embed_dim >= 1, "embed_dim must be >= 1");
    require(hidden >= 1, "hidden must be >= 1");
    require(gcn_layers >= 1, "gcn_layers must be >= 1");
    require(lr > 0.0, "lr must be > 0");
    require(lambda_tv >= 0.0, "lambda_tv must be >= 0");
    require(batch_pair >= 1 && batch_single >= 1, "batch sizes must be >= 1");
    require(eval_every >= 1, "eval_every must be >= 1");
    require(clip_norm >= 0.0, "clip_norm must be >= 0");
    require(max_decode_len >= 1, "max_decode_len must be >= 1");
    require(caption_choice == "canonical" || caption_choice == "random",
            "caption_choice must be canonical or random");
}

std::vector<std::pair<std::string, std::string>> Config::entries() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : fields()) {
        out.emplace_back(f.key, f.get(*this));
    }
    return out;
}

std::string Config::to_text() const {
    std::string out;
    for (const auto& [k, v] : entries()) {
        out += k + " = " + v + "\n";
    }
    return out;
}

} // namespace l2c
