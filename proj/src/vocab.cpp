#include "l2c/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_map>

#include "l2c/errors.hpp"
#include "l2c/tokens.hpp"

namespace l2c {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char ch : text) {
        if (std::isalnum(ch)) {
            cur.push_back(static_cast<char>(std::tolower(ch)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        out.push_back(std::move(cur));
    }
    return out;
}

std::string normalize(const std::string& text) {
    std::string out;
    for (const auto& t : tokenize(text)) {
        out += (out.empty() ? "" : " ") + t;
    }
    return out;
}

Vocab::Vocab() : tokens_{"<pad>", "<bos>", "<eos>", "<unk>"} {
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        ids_[tokens_[i]] = static_cast<int>(i);
    }
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
    Vocab v;
    if (tokens.size() < kNumSpecialTokens) {
        throw FormatError("vocabulary is missing the special tokens");
    }
    v.tokens_ = tokens;
    v.ids_.clear();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!v.ids_.emplace(tokens[i], static_cast<int>(i)).second) {
            throw FormatError("duplicate vocabulary token '" + tokens[i] + "'");
        }
    }
    return v;
}

Vocab Vocab::build(const std::vector<std::string>& corpus, std::size_t min_freq) {
    std::unordered_map<std::string, std::size_t> freq;
    for (const auto& line : corpus) {
        for (auto& t : tokenize(line)) {
            ++freq[t];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> entries;
    for (auto& [tok, n] : freq) {
        if (n >= min_freq) {
            entries.emplace_back(tok, n);
        }
    }
    std::sort(entries.begin(), entries.end(), [](const auto& x, const auto& y) {
        return x.second != y.second ? x.second > y.second : x.first < y.first;
    });
    std::vector<std::string> tokens{"<pad>", "<bos>", "<eos>", "<unk>"};
    for (auto& [tok, _] : entries) {
        tokens.push_back(tok);
    }
    return from_tokens(tokens);
}

int Vocab::id(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() || it->second < kNumSpecialTokens ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
        throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary");
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocab::encode(const std::string& text) const {
    std::vector<int> out{kBos};
    for (const auto& t : tokenize(text)) {
        out.push_back(id(t));
    }
    out.push_back(kEos);
    return out;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
    std::string out;
    for (int i : ids) {
        if (i < kNumSpecialTokens) {
            continue;
        }
        out += (out.empty() ? "" : " ") + token(i);
    }
    return out;
}

void Vocab::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw FormatError("cannot write " + path.string());
    }
    for (const auto& t : tokens_) {
        out << t << '\n';
    }
}

Vocab Vocab::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            tokens.push_back(line);
        }
    }
    return from_tokens(tokens);
}

} // namespace l2c
