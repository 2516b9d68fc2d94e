#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace l2c {

// Lowercases and splits on anything that is not an ASCII letter or digit.
std::vector<std::string> tokenize(const std::string& text);
std::string normalize(const std::string& text);

class Vocab {
public:
    Vocab();

    // Non-special tokens ordered by descending frequency, then lexically.
    // Tokens seen fewer than min_freq times are left out (they encode as UNK).
    static Vocab build(const std::vector<std::string>& corpus, std::size_t min_freq = 1);
    static Vocab from_tokens(const std::vector<std::string>& tokens_in_id_order);

    std::size_t size() const { return tokens_.size(); }
    int id(const std::string& token) const;
    const std::string& token(int id) const;
    const std::vector<std::string>& tokens() const { return tokens_; }

    // BOS + ids + EOS.
    std::vector<int> encode(const std::string& text) const;
    // Drops special tokens and joins with single spaces.
    std::string decode(const std::vector<int>& ids) const;

    void save(const std::filesystem::path& path) const;
    static Vocab load(const std::filesystem::path& path);

    bool operator==(const Vocab& o) const { return tokens_ == o.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::map<std::string, int> ids_;
};

} // namespace l2c
