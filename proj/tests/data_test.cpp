#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "l2c/data.hpp"
#include "l2c/errors.hpp"
#include "l2c/tensor_io.hpp"
#include "l2c/tokens.hpp"
#include "l2c/vocab.hpp"

namespace l2c {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("l2c_data_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string swap_roles(std::string s) {
    const std::string a = "animal1", b = "animal2", tmp = "\x01";
    for (auto [from, to] : {std::pair{a, tmp}, std::pair{b, a}, std::pair{tmp, b}}) {
        for (std::size_t at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size())) {
            s.replace(at, from.size(), to);
        }
    }
    return s;
}

bool contains_word(const std::string& caption, const std::string& word) {
    for (const auto& t : tokenize(caption)) {
        if (t == word) {
            return true;
        }
    }
    return false;
}

std::vector<CreatureSpec> all_attribute_combinations() {
    std::vector<CreatureSpec> out;
    for (int s = 0; s < 3; ++s) {
        for (std::size_t b = 0; b < kNumColors; ++b) {
            for (std::size_t w = 0; w < kNumColors; ++w) {
                for (std::size_t c = 0; c < kNumColors; ++c) {
                    for (int k = 0; k < 2; ++k) {
                        for (int t = 0; t < 2; ++t) {
                            out.push_back({Size(s), Color(b), Color(w), Color(c), Beak(k), Tail(t), 0});
                        }
                    }
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------- rendering

TEST(Render, DeterministicAndShaped) {
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        CreatureSpec s = random_spec(rng);
        RenderedImage a = render(s), b = render(s);
        ASSERT_EQ(a.image.shape(), (Shape{kImageChannels, kImageSize, kImageSize}));
        ASSERT_EQ(a.mask.shape(), (Shape{kImageSize, kImageSize}));
        EXPECT_TRUE(std::equal(a.image.data().begin(), a.image.data().end(), b.image.data().begin()));
        EXPECT_TRUE(std::equal(a.mask.data().begin(), a.mask.data().end(), b.mask.data().begin()));
    }
}

TEST(Render, EveryEnumerableSpecHasBinaryNonzeroMask) {
    for (CreatureSpec s : all_attribute_combinations()) {
        for (std::uint32_t seed : {0u, 1u, 7u, 12345u}) {
            s.placement_seed = seed;
            RenderedImage r = render(s);
            double on = 0.0;
            for (double v : r.mask.data()) {
                ASSERT_TRUE(v == 0.0 || v == 1.0);
                on += v;
            }
            ASSERT_GT(on, 0.0) << spec_to_json(s);
            // Nothing is drawn outside the mask.
            for (std::size_t c = 0; c < kImageChannels; ++c) {
                for (std::size_t p = 0; p < kImageSize * kImageSize; ++p) {
                    if (r.mask[p] == 0.0) {
                        ASSERT_EQ(r.image[c * kImageSize * kImageSize + p], 0.0);
                    }
                }
            }
        }
    }
}

TEST(Render, BellyColourChangesOnlyTheBellyRegion) {
    Rng rng(2);
    const std::size_t plane = kImageSize * kImageSize;
    for (int trial = 0; trial < 100; ++trial) {
        CreatureSpec a = random_spec(rng);
        CreatureSpec b = a;
        b.belly = Color((std::size_t(a.belly) + 1 + rng.below(kNumColors - 1)) % kNumColors);
        RenderedImage ra = render(a), rb = render(b);
        std::size_t changed = 0;
        for (std::size_t p = 0; p < plane; ++p) {
            const bool belly = ra.image[plane + p] != 0.0 || rb.image[plane + p] != 0.0;
            for (std::size_t c = 0; c < kImageChannels; ++c) {
                if (ra.image[c * plane + p] != rb.image[c * plane + p]) {
                    ASSERT_TRUE(belly) << "pixel " << p << " channel " << c;
                    ++changed;
                }
            }
            EXPECT_EQ(ra.mask[p], rb.mask[p]);
        }
        EXPECT_GT(changed, 0u);
    }
}

TEST(Render, AttributesAreVisibleInTheImage) {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        CreatureSpec a = random_spec(rng);
        for (int attr = 0; attr < 6; ++attr) {
            CreatureSpec b = a;
            switch (attr) {
            case 0: b.size = Size((int(a.size) + 1) % 3); break;
            case 1: b.belly = Color((std::size_t(a.belly) + 1) % kNumColors); break;
            case 2: b.wing = Color((std::size_t(a.wing) + 1) % kNumColors); break;
            case 3: b.crest = Color((std::size_t(a.crest) + 1) % kNumColors); break;
            case 4: b.beak = a.beak == Beak::long_beak ? Beak::short_beak : Beak::long_beak; break;
            default: b.tail = a.tail == Tail::forked ? Tail::plain : Tail::forked; break;
            }
            RenderedImage ra = render(a), rb = render(b);
            EXPECT_FALSE(std::equal(ra.image.data().begin(), ra.image.data().end(), rb.image.data().begin()))
                << "attribute " << attr;
        }
    }
}

// ---------------------------------------------------------------- captions

TEST(CaptionPair, IdenticalSpecsGiveSameFamily) {
    Rng rng(4);
    CreatureSpec a = random_spec(rng);
    CreatureSpec b = a;
    b.placement_seed += 1;
    auto caps = caption_pair(a, b, rng);
    ASSERT_EQ(caps.size(), kPairCaptions);
    EXPECT_EQ(caps[0], "the two animals appear to be exactly the same");
    for (const auto& c : caps) {
        EXPECT_TRUE(contains_word(c, "same") || contains_word(c, "identical") || contains_word(c, "difference"));
    }
}

TEST(CaptionPair, SingleDifferenceIsMentionedInEveryCaption) {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        CreatureSpec a = random_spec(rng);
        CreatureSpec b = a;
        switch (rng.below(6)) {
        case 0: b.size = Size((int(a.size) + 1) % 3); break;
        case 1: b.belly = Color((std::size_t(a.belly) + 1) % kNumColors); break;
        case 2: b.wing = Color((std::size_t(a.wing) + 1) % kNumColors); break;
        case 3: b.crest = Color((std::size_t(a.crest) + 1) % kNumColors); break;
        case 4: b.beak = a.beak == Beak::long_beak ? Beak::short_beak : Beak::long_beak; break;
        default: b.tail = a.tail == Tail::forked ? Tail::plain : Tail::forked; break;
        }
        const auto words = differing_attribute_words(a, b);
        ASSERT_EQ(words.size(), 1u);
        for (const auto& c : caption_pair(a, b, rng)) {
            EXPECT_TRUE(contains_word(c, words[0])) << c;
        }
    }
}

TEST(CaptionPair, SwappingSpecsExchangesRoles) {
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        CreatureSpec a = random_spec(rng), b = random_spec(rng);
        if (trial % 4 == 0) {
            b = a;
            b.tail = a.tail == Tail::forked ? Tail::plain : Tail::forked;
        }
        Rng r1{std::uint64_t(trial)}, r2{std::uint64_t(trial)};
        auto ab = caption_pair(a, b, r1), ba = caption_pair(b, a, r2);
        for (std::size_t i = 0; i < kPairCaptions; ++i) {
            EXPECT_EQ(swap_roles(ab[i]), ba[i]);
        }
    }
}

TEST(CaptionPair, CaptionsAreReconstructableFromSpecs) {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        CreatureSpec a = random_spec(rng), b = random_spec(rng);
        for (const auto& c : caption_pair(a, b, rng)) {
            EXPECT_TRUE(is_template_caption(c, a, b)) << c;
        }
        // Flip whether size differs: the caption gains or loses a phrase.
        CreatureSpec other = b;
        other.size = a.size == b.size ? Size((int(a.size) + 1) % 3) : a.size;
        EXPECT_FALSE(is_template_caption(caption_pair(a, b, rng)[0], a, other));
    }
}

TEST(CaptionPair, CanonicalCaptionIsFixedAndParaphrasesDiffer) {
    CreatureSpec a{Size::large, Color::red, Color::blue, Color::yellow, Beak::long_beak, Tail::plain, 0};
    CreatureSpec b{Size::small, Color::red, Color::blue, Color::yellow, Beak::short_beak, Tail::plain, 0};
    Rng r1(1), r2(2);
    auto c1 = caption_pair(a, b, r1), c2 = caption_pair(a, b, r2);
    EXPECT_EQ(c1[0], "animal1 is larger in size than animal2 and animal1 has a longer beak than animal2");
    EXPECT_EQ(c1[0], c2[0]);
    EXPECT_EQ(std::set<std::string>(c1.begin(), c1.end()).size(), kPairCaptions);
}

TEST(CaptionSingle, TenCaptionsNamingTheAttributes) {
    CreatureSpec s{Size::small, Color::green, Color::black, Color::red, Beak::short_beak, Tail::forked, 0};
    auto caps = caption_single(s);
    ASSERT_EQ(caps.size(), kSingleCaptions);
    EXPECT_EQ(caps[0], "a small animal with a green belly black wings a red crest a short beak and a forked tail");
}

// ---------------------------------------------------------------- generation

TEST(GenerateDataset, SplitSizesAreRoundedFractions) {
    GeneratedDataset ds = generate_dataset(1, 50, 20, {0.7, 0.2, 0.1});
    EXPECT_EQ(ds.train.size(), 35u);
    EXPECT_EQ(ds.val.size(), 10u);
    EXPECT_EQ(ds.test.size(), 5u);
    EXPECT_EQ(ds.singles.size(), 20u);
    GeneratedDataset odd = generate_dataset(1, 13, 0, {0.8, 0.1, 0.1});
    EXPECT_EQ(odd.train.size(), 10u);
    EXPECT_EQ(odd.val.size(), 1u);
    EXPECT_EQ(odd.test.size(), 2u);
}

TEST(GenerateDataset, SplitsAreDisjoint) {
    GeneratedDataset ds = generate_dataset(2, 200, 0, {});
    std::set<std::string> ids;
    std::set<std::string> keys;
    for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
        for (const auto& r : *split) {
            EXPECT_TRUE(ids.insert(r.id).second);
            CreatureSpec a = *r.a.spec, b = *r.b.spec;
            a.placement_seed = b.placement_seed = 0;
            const std::string ab = spec_to_json(a) + spec_to_json(b), ba = spec_to_json(b) + spec_to_json(a);
            EXPECT_TRUE(keys.insert(ab).second);
            EXPECT_FALSE(keys.count(ba) && ab != ba);
        }
    }
}

TEST(GenerateDataset, EveryCaptionFollowsTheTemplateBank) {
    GeneratedDataset ds = generate_dataset(3, 60, 10, {});
    std::size_t same = 0;
    for (const auto* split : {&ds.train, &ds.val, &ds.test}) {
        for (const auto& r : *split) {
            ASSERT_EQ(r.captions.size(), kPairCaptions);
            same += r.a.spec->same_attributes(*r.b.spec) ? 1 : 0;
            for (const auto& c : r.captions) {
                EXPECT_TRUE(is_template_caption(c, *r.a.spec, *r.b.spec)) << c;
            }
        }
    }
    EXPECT_GT(same, 0u);
    for (const auto& s : ds.singles) {
        EXPECT_EQ(s.captions, caption_single(*s.image.spec));
    }
}

TEST(GenerateDataset, RejectsBadFractionsAndTinyRequests) {
    EXPECT_THROW(generate_dataset(1, 10, 0, {0.5, 0.2, 0.2}), std::invalid_argument);
    EXPECT_THROW(generate_dataset(1, 10, 0, {1.2, -0.1, -0.1}), std::invalid_argument);
    EXPECT_THROW(generate_dataset(1, 2, 0, {0.8, 0.1, 0.1}), std::invalid_argument);
    EXPECT_NO_THROW(generate_dataset(1, 8, 16, {1.0, 0.0, 0.0}));
}

TEST(GenerateDataset, SameSeedGivesByteIdenticalFiles) {
    const fs::path d1 = scratch_dir("same1"), d2 = scratch_dir("same2"), d3 = scratch_dir("other");
    auto f1 = write_dataset(generate_dataset(9, 40, 12, {}), d1);
    auto f2 = write_dataset(generate_dataset(9, 40, 12, {}), d2);
    auto f3 = write_dataset(generate_dataset(10, 40, 12, {}), d3);
    ASSERT_EQ(f1.size(), 5u);
    bool any_diff = false;
    for (std::size_t i = 0; i < f1.size(); ++i) {
        EXPECT_EQ(read_file_bytes(f1[i]), read_file_bytes(f2[i])) << f1[i];
        any_diff = any_diff || read_file_bytes(f1[i]) != read_file_bytes(f3[i]);
    }
    EXPECT_TRUE(any_diff);
}

// ---------------------------------------------------------------- file formats

TEST(Jsonl, RoundTripsSpecsAndCaptions) {
    const fs::path dir = scratch_dir("roundtrip");
    GeneratedDataset ds = generate_dataset(11, 20, 5, {});
    write_dataset(ds, dir);
    auto train = read_pairs_jsonl(pair_split_path(dir, "train"));
    ASSERT_EQ(train.size(), ds.train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        EXPECT_EQ(train[i].id, ds.train[i].id);
        EXPECT_EQ(*train[i].a.spec, *ds.train[i].a.spec);
        EXPECT_EQ(*train[i].b.spec, *ds.train[i].b.spec);
        EXPECT_EQ(train[i].captions, ds.train[i].captions);
    }
    auto singles = read_singles_jsonl(singles_path(dir));
    ASSERT_EQ(singles.size(), 5u);
    EXPECT_EQ(*singles[3].image.spec, *ds.singles[3].image.spec);
    EXPECT_EQ(Vocab::load(vocab_path(dir)), Vocab::build(training_corpus(ds)));
}

TEST(Jsonl, PrecomputedTensorReferences) {
    const fs::path dir = scratch_dir("precomputed");
    RenderedImage r = render(CreatureSpec{});
    write_tensor(dir / "a.img", r.image);
    write_tensor(dir / "a.mask", r.mask);
    PairRecord rec{"x0", {std::nullopt, "a.img", "a.mask"}, {CreatureSpec{}, {}, {}},
                   std::vector<std::string>(kPairCaptions, "the animals are identical")};
    write_pairs_jsonl(dir / "pairs.train.jsonl", {rec});
    auto back = read_pairs_jsonl(dir / "pairs.train.jsonl");
    ASSERT_EQ(back.size(), 1u);
    EXPECT_FALSE(back[0].a.spec.has_value());
    RenderedImage loaded = load_image(back[0].a, dir);
    EXPECT_TRUE(std::equal(loaded.image.data().begin(), loaded.image.data().end(), r.image.data().begin()));
    RenderedImage rendered = load_image(back[0].b, dir);
    EXPECT_TRUE(std::equal(rendered.mask.data().begin(), rendered.mask.data().end(), r.mask.data().begin()));
}

TEST(Jsonl, MalformedInputIsFormatError) {
    const fs::path dir = scratch_dir("malformed");
    {
        std::ofstream(dir / "bad.jsonl") << "{\"id\": \"p0\", \"a\": {\"size\": \"huge\"}}\n";
        std::ofstream(dir / "short.jsonl")
            << R"({"id":"p0","a":{"size":"small","belly":"red","wing":"red","crest":"red","beak":"short","tail":"plain"},)"
            << R"("b":{"size":"small","belly":"red","wing":"red","crest":"red","beak":"short","tail":"plain"},"captions":["x"]})"
            << "\n";
        std::ofstream(dir / "garbage.jsonl") << "not json\n";
    }
    EXPECT_THROW(read_pairs_jsonl(dir / "bad.jsonl"), FormatError);
    EXPECT_THROW(read_pairs_jsonl(dir / "short.jsonl"), FormatError);
    EXPECT_THROW(read_pairs_jsonl(dir / "garbage.jsonl"), FormatError);
    EXPECT_THROW(read_pairs_jsonl(dir / "missing.jsonl"), FormatError);
    EXPECT_THROW(spec_from_json("{\"size\": 3}"), FormatError);
}

TEST(SpecJson, RoundTrip) {
    Rng rng(12);
    for (int i = 0; i < 50; ++i) {
        CreatureSpec s = random_spec(rng);
        EXPECT_EQ(spec_from_json(spec_to_json(s)), s);
    }
}

// ---------------------------------------------------------------- vocabulary

TEST(Vocab, FrequencyThenLexicalOrder) {
    Vocab v = Vocab::build({"a a b"});
    ASSERT_EQ(v.size(), 6u);
    EXPECT_EQ(v.token(4), "a");
    EXPECT_EQ(v.token(5), "b");
    Vocab w = Vocab::build({"zeta beta", "beta alpha zeta"});
    EXPECT_EQ(w.token(4), "beta");
    EXPECT_EQ(w.token(5), "zeta");
    EXPECT_EQ(w.token(6), "alpha");
}

TEST(Vocab, SpecialTokensAtFixedIds) {
    Vocab v = Vocab::build({"x"});
    EXPECT_EQ(v.token(kPad), "<pad>");
    EXPECT_EQ(v.token(kBos), "<bos>");
    EXPECT_EQ(v.token(kEos), "<eos>");
    EXPECT_EQ(v.token(kUnk), "<unk>");
    EXPECT_EQ(v.id("<bos>"), kUnk);
}

TEST(Vocab, EncodeDecodeRoundTrip) {
    Vocab v = Vocab::build({"Animal1 has a LONGER beak, than animal2."});
    const std::string s = "animal1 has a longer beak than animal2";
    std::vector<int> ids = v.encode("Animal1 has a longer beak; than animal2!");
    EXPECT_EQ(ids.front(), kBos);
    EXPECT_EQ(ids.back(), kEos);
    EXPECT_EQ(v.decode(ids), s);
    EXPECT_EQ(normalize("  Animal1 has a LONGER beak, than animal2. "), s);
}

TEST(Vocab, UnseenAndRareWordsEncodeAsUnk) {
    Vocab v = Vocab::build({"a a b"}, 2);
    EXPECT_EQ(v.size(), 5u);
    EXPECT_EQ(v.encode("b q"), (std::vector<int>{kBos, kUnk, kUnk, kEos}));
    EXPECT_EQ(v.encode("a"), (std::vector<int>{kBos, 4, kEos}));
}

TEST(Vocab, SaveLoadOneTokenPerLine) {
    const fs::path dir = scratch_dir("vocab");
    Vocab v = Vocab::build({"the red animal", "the blue animal"});
    v.save(dir / "vocab.txt");
    EXPECT_EQ(Vocab::load(dir / "vocab.txt"), v);
    const auto bytes = read_file_bytes(dir / "vocab.txt");
    EXPECT_EQ(std::string(bytes.begin(), bytes.end()), "<pad>\n<bos>\n<eos>\n<unk>\nanimal\nthe\nblue\nred\n");
    EXPECT_THROW(v.token(99), std::out_of_range);
    EXPECT_THROW(Vocab::from_tokens({"<pad>", "<bos>", "<eos>", "<unk>", "x", "x"}), FormatError);
}

} // namespace
} // namespace l2c
