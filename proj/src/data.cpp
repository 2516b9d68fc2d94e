#include "l2c/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "l2c/errors.hpp"
#include "l2c/tensor_io.hpp"
#include "l2c/vocab.hpp"

namespace l2c {

using nlohmann::json;

namespace {

constexpr std::array<const char*, 3> kSizeWords{"small", "medium", "large"};
constexpr std::array<const char*, kNumColors> kColorWords{"red", "yellow", "blue", "green", "brown", "black"};
constexpr std::array<const char*, 2> kBeakWords{"short", "long"};
constexpr std::array<const char*, 2> kTailWords{"plain", "forked"};
constexpr std::array<double, kNumColors> kLuminance{0.30, 0.90, 0.20, 0.60, 0.40, 0.05};

template <std::size_t N>
std::size_t index_of(const std::array<const char*, N>& words, const std::string& w, const char* field) {
    for (std::size_t i = 0; i < N; ++i) {
        if (w == words[i]) {
            return i;
        }
    }
    throw FormatError(std::string("unknown ") + field + " value '" + w + "'");
}

// ------------------------------------------------------------------ rendering

struct Canvas {
    Tensor image{Shape{kImageChannels, kImageSize, kImageSize}};
    Tensor mask{Shape{kImageSize, kImageSize}};

    static bool inside(int y, int x) { return y >= 0 && x >= 0 && y < int(kImageSize) && x < int(kImageSize); }

    void put(std::size_t ch, int y, int x, double v) {
        if (inside(y, x)) {
            image[(ch * kImageSize + std::size_t(y)) * kImageSize + std::size_t(x)] = v;
        }
    }
    void cover(int y, int x) {
        if (inside(y, x)) {
            mask[std::size_t(y) * kImageSize + std::size_t(x)] = 1.0;
        }
    }
};

bool in_ellipse(int y, int x, double cy, double cx, double ry, double rx) {
    const double dy = (y - cy) / ry, dx = (x - cx) / rx;
    return dy * dy + dx * dx <= 1.0;
}

} // namespace

const char* size_word(Size s) { return kSizeWords[std::size_t(s)]; }
const char* color_word(Color c) { return kColorWords[std::size_t(c)]; }
const char* beak_word(Beak b) { return kBeakWords[std::size_t(b)]; }
const char* tail_word(Tail t) { return kTailWords[std::size_t(t)]; }

CreatureSpec random_spec(Rng& rng) {
    CreatureSpec s;
    s.size = Size(rng.below(3));
    s.belly = Color(rng.below(kNumColors));
    s.wing = Color(rng.below(kNumColors));
    s.crest = Color(rng.below(kNumColors));
    s.beak = Beak(rng.below(2));
    s.tail = Tail(rng.below(2));
    s.placement_seed = static_cast<std::uint32_t>(rng.next() & 0xffffffffu);
    return s;
}

RenderedImage render(const CreatureSpec& spec) {
    // Channels: 0 body, 1 belly colour, 2 wing colour, 3 crest colour,
    // 4 beak, 5 tail, 6 size code, 7 luminance of the topmost part.
    Canvas cv;
    Rng jitter(spec.placement_seed);
    const int dx = int(jitter.below(3)) - 1;
    const int dy = int(jitter.below(3)) - 1;
    const int sz = int(spec.size);
    const double rx = 6.0 + 2.0 * sz, ry = 4.0 + sz;
    const double cx = 13.0 + dx, cy = 17.0 + dy;
    const double size_code = (sz + 1) / 3.0;
    const double belly_code = (double(spec.belly) + 1) / kNumColors;
    const double wing_code = (double(spec.wing) + 1) / kNumColors;
    const double crest_code = (double(spec.crest) + 1) / kNumColors;

    const int hx = int(cx + rx), hy = int(cy - ry + 1);
    for (int y = 0; y < int(kImageSize); ++y) {
        for (int x = 0; x < int(kImageSize); ++x) {
            const bool body = in_ellipse(y, x, cy, cx, ry, rx);
            const bool head = in_ellipse(y, x, hy, hx, 3.0, 3.0);
            if (body || head) {
                cv.put(0, y, x, 1.0);
                cv.put(6, y, x, size_code);
                cv.put(7, y, x, 0.5);
                cv.cover(y, x);
            }
            if (body && y >= int(cy) + 1) {
                cv.put(1, y, x, belly_code);
                cv.put(7, y, x, kLuminance[std::size_t(spec.belly)]);
            }
        }
    }
    // Wing over the upper body.
    for (int y = 0; y < int(kImageSize); ++y) {
        for (int x = 0; x < int(kImageSize); ++x) {
            if (in_ellipse(y, x, cy - 1.5, cx - 1.0, 0.5 * ry, 0.6 * rx) && y <= int(cy)) {
                cv.put(2, y, x, wing_code);
                cv.put(7, y, x, kLuminance[std::size_t(spec.wing)]);
                cv.cover(y, x);
            }
        }
    }
    // Crest: a small triangle above the head.
    for (int t = 0; t < 3; ++t) {
        for (int x = hx - 2 + t; x <= hx + 2 - t; ++x) {
            const int y = hy - 3 - t;
            cv.put(3, y, x, crest_code);
            cv.put(7, y, x, kLuminance[std::size_t(spec.crest)]);
            cv.cover(y, x);
        }
    }
    // Beak.
    const int beak_len = spec.beak == Beak::long_beak ? 5 : 2;
    for (int i = 0; i < beak_len; ++i) {
        cv.put(4, hy, hx + 3 + i, 1.0);
        cv.put(7, hy, hx + 3 + i, 0.7);
        cv.cover(hy, hx + 3 + i);
    }
    // Tail.
    const int tx = int(cx - rx), ty = int(cy);
    for (int i = 1; i <= 4; ++i) {
        if (spec.tail == Tail::plain) {
            for (int j = -1; j <= 1; ++j) {
                cv.put(5, ty + j, tx - i, 1.0);
                cv.put(7, ty + j, tx - i, 0.5);
                cv.cover(ty + j, tx - i);
            }
        } else {
            for (int sgn : {-1, 1}) {
                cv.put(5, ty + sgn * i, tx - i, 1.0);
                cv.put(7, ty + sgn * i, tx - i, 0.5);
                cv.cover(ty + sgn * i, tx - i);
            }
        }
    }
    return {cv.image, cv.mask};
}

RenderedImage load_image(const ImageSource& source, const std::filesystem::path& base_dir) {
    if (source.spec) {
        return render(*source.spec);
    }
    RenderedImage out{read_tensor(base_dir / source.image_file), read_tensor(base_dir / source.mask_file)};
    if (out.image.rank() != 3 || out.mask.rank() != 2 || out.image.dim(1) != out.mask.dim(0) ||
        out.image.dim(2) != out.mask.dim(1)) {
        throw FormatError("precomputed image " + source.image_file + " " + shape_str(out.image.shape()) +
                          " and mask " + shape_str(out.mask.shape()) + " do not conform");
    }
    return out;
}

// ------------------------------------------------------------------ captions

namespace {

enum class Attr { size, beak, tail, belly, wing, crest };
constexpr std::array<Attr, 6> kAttrOrder{Attr::size, Attr::beak, Attr::tail, Attr::belly, Attr::wing, Attr::crest};

const char* attr_word(Attr a) {
    switch (a) {
    case Attr::size:
        return "size";
    case Attr::beak:
        return "beak";
    case Attr::tail:
        return "tail";
    case Attr::belly:
        return "belly";
    case Attr::wing:
        return "wings";
    case Attr::crest:
        return "crest";
    }
    return "";
}

bool differs(Attr a, const CreatureSpec& x, const CreatureSpec& y) {
    switch (a) {
    case Attr::size:
        return x.size != y.size;
    case Attr::beak:
        return x.beak != y.beak;
    case Attr::tail:
        return x.tail != y.tail;
    case Attr::belly:
        return x.belly != y.belly;
    case Attr::wing:
        return x.wing != y.wing;
    case Attr::crest:
        return x.crest != y.crest;
    }
    return false;
}

std::string fill(std::string tpl, const std::vector<std::pair<std::string, std::string>>& vars) {
    for (const auto& [key, value] : vars) {
        const std::string slot = "{" + key + "}";
        for (std::size_t at = tpl.find(slot); at != std::string::npos; at = tpl.find(slot, at + value.size())) {
            tpl.replace(at, slot.size(), value);
        }
    }
    return tpl;
}

constexpr std::array<const char*, kPairCaptions> kSameTemplates{
    "the two animals appear to be exactly the same",
    "the two animals look exactly the same",
    "there is no visible difference between the two animals",
    "both animals appear to be exactly the same",
    "the animals are identical",
};

// {X} is the "more" side (larger, longer beak, forked tail, or the lower
// palette index for colours) so swapping the specs swaps only the roles.
constexpr std::array<const char*, kPairCaptions> kSizeTemplates{
    "{X} is larger in size than {Y}",
    "{X} has a bigger size than {Y}",
    "{Y} is smaller in size than {X}",
    "the size of {X} is larger than that of {Y}",
    "{X} exceeds {Y} in size",
};
constexpr std::array<const char*, kPairCaptions> kBeakTemplates{
    "{X} has a longer beak than {Y}",
    "{Y} has a shorter beak than {X}",
    "the beak of {X} is longer than the beak of {Y}",
    "{X} has a long beak while {Y} has a short beak",
    "{Y} has a short beak compared to {X}",
};
constexpr std::array<const char*, kPairCaptions> kTailTemplates{
    "{X} has a forked tail while {Y} has a plain tail",
    "the tail of {X} is forked and the tail of {Y} is plain",
    "{Y} has a plain tail unlike {X}",
    "{X} has a split tail but {Y} has a plain tail",
    "the tail is forked on {X} but plain on {Y}",
};
constexpr std::array<const char*, kPairCaptions> kColorTemplates{
    "{X} has a {CX} {PART} while {Y} has a {CY} {PART}",
    "the {PART} of {X} is {CX} and the {PART} of {Y} is {CY}",
    "{Y} has a {CY} {PART} unlike the {CX} {PART} of {X}",
    "{X} shows a {CX} {PART} and {Y} shows a {CY} {PART}",
    "the {PART} is {CX} on {X} but {CY} on {Y}",
};
constexpr std::array<const char*, kPairCaptions> kWingTemplates{
    "{X} has {CX} wings while {Y} has {CY} wings",
    "the wings of {X} are {CX} and the wings of {Y} are {CY}",
    "{Y} has {CY} wings unlike the {CX} wings of {X}",
    "{X} shows {CX} wings and {Y} shows {CY} wings",
    "the wings are {CX} on {X} but {CY} on {Y}",
};

std::string phrase(Attr attr, const CreatureSpec& a, const CreatureSpec& b, std::size_t variant) {
    // true when animal1 takes the {X} role.
    bool first_is_x = true;
    std::string cx, cy;
    const char* tpl = "";
    auto colors = [&](Color ca, Color cb) {
        first_is_x = ca < cb;
        cx = color_word(first_is_x ? ca : cb);
        cy = color_word(first_is_x ? cb : ca);
    };
    switch (attr) {
    case Attr::size:
        first_is_x = a.size > b.size;
        tpl = kSizeTemplates[variant];
        break;
    case Attr::beak:
        first_is_x = a.beak == Beak::long_beak;
        tpl = kBeakTemplates[variant];
        break;
    case Attr::tail:
        first_is_x = a.tail == Tail::forked;
        tpl = kTailTemplates[variant];
        break;
    case Attr::belly:
        colors(a.belly, b.belly);
        tpl = kColorTemplates[variant];
        break;
    case Attr::wing:
        colors(a.wing, b.wing);
        tpl = kWingTemplates[variant];
        break;
    case Attr::crest:
        colors(a.crest, b.crest);
        tpl = kColorTemplates[variant];
        break;
    }
    const std::string part = attr == Attr::belly ? "belly" : "crest";
    return fill(tpl, {{"X", first_is_x ? "animal1" : "animal2"},
                      {"Y", first_is_x ? "animal2" : "animal1"},
                      {"CX", cx},
                      {"CY", cy},
                      {"PART", part}});
}

} // namespace

std::vector<std::string> differing_attribute_words(const CreatureSpec& a, const CreatureSpec& b) {
    std::vector<std::string> out;
    for (Attr attr : kAttrOrder) {
        if (differs(attr, a, b)) {
            out.emplace_back(attr_word(attr));
        }
    }
    return out;
}

std::vector<std::string> caption_pair(const CreatureSpec& a, const CreatureSpec& b, Rng& rng) {
    std::vector<std::string> out;
    if (a.same_attributes(b)) {
        out.assign(kSameTemplates.begin(), kSameTemplates.end());
        return out;
    }
    std::vector<Attr> deltas;
    for (Attr attr : kAttrOrder) {
        if (differs(attr, a, b)) {
            deltas.push_back(attr);
        }
    }
    // Paraphrase variants 1..4 are dealt to captions 1..4 in a per-attribute
    // shuffled order.
    std::vector<std::vector<std::size_t>> order(deltas.size(), {1, 2, 3, 4});
    for (auto& o : order) {
        rng.shuffle(o);
    }
    for (std::size_t c = 0; c < kPairCaptions; ++c) {
        std::string text;
        for (std::size_t d = 0; d < deltas.size(); ++d) {
            const std::size_t variant = c == 0 ? 0 : order[d][c - 1];
            text += (d ? " and " : "") + phrase(deltas[d], a, b, variant);
        }
        out.push_back(std::move(text));
    }
    return out;
}

bool is_template_caption(const std::string& caption, const CreatureSpec& a, const CreatureSpec& b) {
    if (a.same_attributes(b)) {
        return std::find(kSameTemplates.begin(), kSameTemplates.end(), caption) != kSameTemplates.end();
    }
    std::vector<Attr> deltas;
    for (Attr attr : kAttrOrder) {
        if (differs(attr, a, b)) {
            deltas.push_back(attr);
        }
    }
    auto match = [&](auto&& self, std::size_t d, std::size_t pos) -> bool {
        if (d == deltas.size()) {
            return pos == caption.size();
        }
        if (d > 0) {
            if (caption.compare(pos, 5, " and ") != 0) {
                return false;
            }
            pos += 5;
        }
        for (std::size_t v = 0; v < kPairCaptions; ++v) {
            const std::string p = phrase(deltas[d], a, b, v);
            if (caption.compare(pos, p.size(), p) == 0 && self(self, d + 1, pos + p.size())) {
                return true;
            }
        }
        return false;
    };
    return match(match, 0, 0);
}

std::vector<std::string> caption_single(const CreatureSpec& s) {
    static constexpr std::array<const char*, kSingleCaptions> templates{
        "a {S} animal with a {B} belly {W} wings a {C} crest a {K} beak and a {T} tail",
        "this {S} animal has a {B} belly and {W} wings",
        "the animal has a {C} crest and a {K} beak",
        "a {S} animal with a {T} tail",
        "this animal has {W} wings and a {B} belly",
        "a {S} animal with a {C} crest",
        "the {K} beak and the {T} tail stand out on this animal",
        "this is a {S} animal with {W} wings",
        "the belly is {B} and the crest is {C}",
        "an animal with a {B} belly a {K} beak and a {T} tail",
    };
    std::vector<std::string> out;
    for (const char* tpl : templates) {
        out.push_back(fill(tpl, {{"S", size_word(s.size)},
                                 {"B", color_word(s.belly)},
                                 {"W", color_word(s.wing)},
                                 {"C", color_word(s.crest)},
                                 {"K", beak_word(s.beak)},
                                 {"T", tail_word(s.tail)}}));
    }
    return out;
}

// ------------------------------------------------------------------ generation

namespace {

using AttrKey = std::tuple<int, int, int, int, int, int>;

AttrKey key_of(const CreatureSpec& s) {
    return {int(s.size), int(s.belly), int(s.wing), int(s.crest), int(s.beak), int(s.tail)};
}

// Comparison pairs favour near-identical creatures: 15% share every
// attribute, the rest differ in one to three attributes.
CreatureSpec partner_for(const CreatureSpec& a, Rng& rng) {
    CreatureSpec b = a;
    b.placement_seed = static_cast<std::uint32_t>(rng.next() & 0xffffffffu);
    if (rng.uniform() < 0.15) {
        return b;
    }
    std::vector<Attr> attrs(kAttrOrder.begin(), kAttrOrder.end());
    rng.shuffle(attrs);
    const std::size_t changes = 1 + rng.below(3);
    for (std::size_t i = 0; i < changes; ++i) {
        switch (attrs[i]) {
        case Attr::size:
            b.size = Size((std::size_t(a.size) + 1 + rng.below(2)) % 3);
            break;
        case Attr::beak:
            b.beak = a.beak == Beak::long_beak ? Beak::short_beak : Beak::long_beak;
            break;
        case Attr::tail:
            b.tail = a.tail == Tail::forked ? Tail::plain : Tail::forked;
            break;
        case Attr::belly:
            b.belly = Color((std::size_t(a.belly) + 1 + rng.below(kNumColors - 1)) % kNumColors);
            break;
        case Attr::wing:
            b.wing = Color((std::size_t(a.wing) + 1 + rng.below(kNumColors - 1)) % kNumColors);
            break;
        case Attr::crest:
            b.crest = Color((std::size_t(a.crest) + 1 + rng.below(kNumColors - 1)) % kNumColors);
            break;
        }
    }
    return b;
}

std::string make_id(char prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%06zu", prefix, i);
    return buf;
}

} // namespace

GeneratedDataset generate_dataset(std::uint64_t seed, std::size_t n_pairs, std::size_t n_singles,
                                  const SplitFractions& f) {
    if (f.train < 0 || f.val < 0 || f.test < 0 || std::fabs(f.train + f.val + f.test - 1.0) > 1e-9) {
        throw std::invalid_argument("split fractions must be nonnegative and sum to 1");
    }
    const std::size_t n_train = static_cast<std::size_t>(std::llround(f.train * double(n_pairs)));
    const std::size_t n_val = std::min(n_pairs - std::min(n_pairs, n_train),
                                       static_cast<std::size_t>(std::llround(f.val * double(n_pairs))));
    const std::size_t n_test = n_pairs - std::min(n_pairs, n_train + n_val);
    if ((f.train > 0 && n_train == 0) || (f.val > 0 && n_val == 0) || (f.test > 0 && n_test == 0) ||
        n_train > n_pairs) {
        throw std::invalid_argument("n_pairs=" + std::to_string(n_pairs) + " is too small for the requested split");
    }

    GeneratedDataset out;
    Rng rng(mix_seed(seed, 1));
    std::set<std::pair<AttrKey, AttrKey>> seen;
    std::size_t attempts = 0;
    while (seen.size() < n_pairs) {
        if (++attempts > 1000 * (n_pairs + 10)) {
            throw std::invalid_argument("cannot draw " + std::to_string(n_pairs) + " distinct pairs");
        }
        const CreatureSpec a = random_spec(rng);
        const CreatureSpec b = partner_for(a, rng);
        const auto ka = key_of(a), kb = key_of(b);
        if (seen.count({ka, kb}) || seen.count({kb, ka})) {
            continue;
        }
        seen.insert({ka, kb});
        const std::size_t i = seen.size() - 1;
        PairRecord rec{make_id('p', i), {a, {}, {}}, {b, {}, {}}, caption_pair(a, b, rng)};
        auto& split = i < n_train ? out.train : (i < n_train + n_val ? out.val : out.test);
        split.push_back(std::move(rec));
    }
    Rng srng(mix_seed(seed, 2));
    for (std::size_t i = 0; i < n_singles; ++i) {
        const CreatureSpec s = random_spec(srng);
        out.singles.push_back({make_id('s', i), {s, {}, {}}, caption_single(s)});
    }
    return out;
}

// ------------------------------------------------------------------ JSON / JSONL

namespace {

json spec_json(const CreatureSpec& s) {
    return json{{"size", size_word(s.size)},   {"belly", color_word(s.belly)}, {"wing", color_word(s.wing)},
                {"crest", color_word(s.crest)}, {"beak", beak_word(s.beak)},    {"tail", tail_word(s.tail)},
                {"seed", s.placement_seed}};
}

CreatureSpec spec_from(const json& j) {
    try {
        CreatureSpec s;
        s.size = Size(index_of(kSizeWords, j.at("size").get<std::string>(), "size"));
        s.belly = Color(index_of(kColorWords, j.at("belly").get<std::string>(), "belly"));
        s.wing = Color(index_of(kColorWords, j.at("wing").get<std::string>(), "wing"));
        s.crest = Color(index_of(kColorWords, j.at("crest").get<std::string>(), "crest"));
        s.beak = Beak(index_of(kBeakWords, j.at("beak").get<std::string>(), "beak"));
        s.tail = Tail(index_of(kTailWords, j.at("tail").get<std::string>(), "tail"));
        s.placement_seed = j.value("seed", 0u);
        return s;
    } catch (const json::exception& e) {
        throw FormatError(std::string("invalid spec object: ") + e.what());
    }
}

json source_json(const ImageSource& src) {
    if (src.spec) {
        return spec_json(*src.spec);
    }
    return json{{"image", src.image_file}, {"mask", src.mask_file}};
}

ImageSource source_from(const json& j) {
    if (j.contains("image")) {
        return {std::nullopt, j.at("image").get<std::string>(), j.at("mask").get<std::string>()};
    }
    return {spec_from(j), {}, {}};
}

template <class F>
void for_each_line(const std::filesystem::path& path, F&& f) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        try {
            f(json::parse(line));
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void write_lines(const std::filesystem::path& path, const std::vector<json>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw FormatError("cannot write " + path.string());
    }
    for (const json& r : rows) {
        out << r.dump() << '\n';
    }
}

} // namespace

std::string spec_to_json(const CreatureSpec& spec) { return spec_json(spec).dump(); }

CreatureSpec spec_from_json(const std::string& text) {
    try {
        return spec_from(json::parse(text));
    } catch (const json::exception& e) {
        throw FormatError(std::string("invalid spec JSON: ") + e.what());
    }
}

void write_pairs_jsonl(const std::filesystem::path& path, const std::vector<PairRecord>& records) {
    std::vector<json> rows;
    for (const auto& r : records) {
        rows.push_back(json{{"id", r.id}, {"a", source_json(r.a)}, {"b", source_json(r.b)}, {"captions", r.captions}});
    }
    write_lines(path, rows);
}

void write_singles_jsonl(const std::filesystem::path& path, const std::vector<SingleRecord>& records) {
    std::vector<json> rows;
    for (const auto& r : records) {
        rows.push_back(json{{"id", r.id}, {"spec", source_json(r.image)}, {"captions", r.captions}});
    }
    write_lines(path, rows);
}

std::vector<PairRecord> read_pairs_jsonl(const std::filesystem::path& path) {
    std::vector<PairRecord> out;
    for_each_line(path, [&](const json& j) {
        PairRecord r{j.at("id").get<std::string>(), source_from(j.at("a")), source_from(j.at("b")),
                     j.at("captions").get<std::vector<std::string>>()};
        if (r.captions.size() != kPairCaptions) {
            throw FormatError(path.string() + ": pair " + r.id + " must have exactly 5 captions");
        }
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<SingleRecord> read_singles_jsonl(const std::filesystem::path& path) {
    std::vector<SingleRecord> out;
    for_each_line(path, [&](const json& j) {
        SingleRecord r{j.at("id").get<std::string>(), source_from(j.at("spec")),
                       j.at("captions").get<std::vector<std::string>>()};
        if (r.captions.empty()) {
            throw FormatError(path.string() + ": single " + r.id + " has no captions");
        }
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<std::string> training_corpus(const GeneratedDataset& ds) {
    std::vector<std::string> corpus;
    for (const auto& r : ds.train) {
        corpus.insert(corpus.end(), r.captions.begin(), r.captions.end());
    }
    for (const auto& r : ds.singles) {
        corpus.insert(corpus.end(), r.captions.begin(), r.captions.end());
    }
    return corpus;
}

std::vector<std::filesystem::path> write_dataset(const GeneratedDataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const std::pair<const char*, const std::vector<PairRecord>*> splits[] = {
        {"train", &ds.train}, {"val", &ds.val}, {"test", &ds.test}};
    for (const auto& [name, records] : splits) {
        written.push_back(pair_split_path(dir, name));
        write_pairs_jsonl(written.back(), *records);
    }
    written.push_back(singles_path(dir));
    write_singles_jsonl(written.back(), ds.singles);
    written.push_back(vocab_path(dir));
    Vocab::build(training_corpus(ds)).save(written.back());
    return written;
}

std::filesystem::path pair_split_path(const std::filesystem::path& dir, const std::string& split) {
    return dir / ("pairs." + split + ".jsonl");
}

std::filesystem::path singles_path(const std::filesystem::path& dir) { return dir / "singles.train.jsonl"; }

std::filesystem::path vocab_path(const std::filesystem::path& dir) { return dir / "vocab.txt"; }

} // namespace l2c
