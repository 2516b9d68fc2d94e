#pragma once

// Synthetic "creature" domain: attribute specs, a deterministic renderer,
// template captions for pairs and singles, dataset generation and JSONL I/O.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "l2c/rng.hpp"
#include "l2c/tensor.hpp"

namespace l2c {

enum class Size : std::uint8_t { small, medium, large };
enum class Color : std::uint8_t { red, yellow, blue, green, brown, black };
enum class Beak : std::uint8_t { short_beak, long_beak };
enum class Tail : std::uint8_t { plain, forked };

inline constexpr std::size_t kNumColors = 6;
inline constexpr std::size_t kImageChannels = 8;
inline constexpr std::size_t kImageSize = 32;

struct CreatureSpec {
    Size size = Size::medium;
    Color belly = Color::red;
    Color wing = Color::blue;
    Color crest = Color::yellow;
    Beak beak = Beak::short_beak;
    Tail tail = Tail::plain;
    std::uint32_t placement_seed = 0;

    // Equality of the attributes, ignoring placement.
    bool same_attributes(const CreatureSpec& o) const {
        return size == o.size && belly == o.belly && wing == o.wing && crest == o.crest && beak == o.beak &&
               tail == o.tail;
    }
    bool operator==(const CreatureSpec&) const = default;
};

const char* size_word(Size s);
const char* color_word(Color c);
const char* beak_word(Beak b);
const char* tail_word(Tail t);

CreatureSpec random_spec(Rng& rng);

struct RenderedImage {
    Tensor image;  // [8, 32, 32]
    Tensor mask;   // [32, 32], binary, nonzero
};

// Deterministic in the creature spec: body, belly, wing, head, crest, beak and tail
// blobs, each attribute written to its own channel.
RenderedImage render(const CreatureSpec& spec);

// Where an image comes from: a spec rendered on demand, or precomputed
// image/mask tensor files (paths relative to the dataset directory).
struct ImageSource {
    std::optional<CreatureSpec> spec;
    std::string image_file;
    std::string mask_file;
};

RenderedImage load_image(const ImageSource& source, const std::filesystem::path& base_dir);

inline constexpr std::size_t kPairCaptions = 5;
inline constexpr std::size_t kSingleCaptions = 10;

// Five comparative captions. Caption 0 is the canonical phrasing; the rest
// draw paraphrases from the template bank using `rng`. Identical attributes
// yield the "exactly the same" family.
std::vector<std::string> caption_pair(const CreatureSpec& a, const CreatureSpec& b, Rng& rng);
std::vector<std::string> caption_single(const CreatureSpec& spec);

// True when `caption` can be produced from (a, b) by the template bank.
bool is_template_caption(const std::string& caption, const CreatureSpec& a, const CreatureSpec& b);

// Attribute keywords mentioned in every caption of a pair differing in it.
std::vector<std::string> differing_attribute_words(const CreatureSpec& a, const CreatureSpec& b);

struct PairRecord {
    std::string id;
    ImageSource a;
    ImageSource b;
    std::vector<std::string> captions;
};

struct SingleRecord {
    std::string id;
    ImageSource image;
    std::vector<std::string> captions;
};

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

struct GeneratedDataset {
    std::vector<PairRecord> train, val, test;
    std::vector<SingleRecord> singles;
};

// Throws std::invalid_argument when fractions do not sum to 1 or a split
// with a positive fraction would be empty.
GeneratedDataset generate_dataset(std::uint64_t seed, std::size_t n_pairs, std::size_t n_singles,
                                  const SplitFractions& fractions);

// JSON spec objects.
std::string spec_to_json(const CreatureSpec& spec);
CreatureSpec spec_from_json(const std::string& json_text);

void write_pairs_jsonl(const std::filesystem::path& path, const std::vector<PairRecord>& records);
void write_singles_jsonl(const std::filesystem::path& path, const std::vector<SingleRecord>& records);
std::vector<PairRecord> read_pairs_jsonl(const std::filesystem::path& path);
std::vector<SingleRecord> read_singles_jsonl(const std::filesystem::path& path);

// Captions the vocabulary is built from: training pairs and singles.
std::vector<std::string> training_corpus(const GeneratedDataset& ds);

// Writes the three pair splits, the singles file and the vocabulary into
// `dir` (created if missing). Returns the written paths.
std::vector<std::filesystem::path> write_dataset(const GeneratedDataset& ds, const std::filesystem::path& dir);

// Standard file names inside a dataset directory.
std::filesystem::path pair_split_path(const std::filesystem::path& dir, const std::string& split);
std::filesystem::path singles_path(const std::filesystem::path& dir);
std::filesystem::path vocab_path(const std::filesystem::path& dir);

} // namespace l2c
