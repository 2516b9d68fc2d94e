#include "l2c/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "l2c/vocab.hpp"

namespace l2c {
namespace {

constexpr int kMaxN = 4;
constexpr double kSmoothing = 1e-9;
constexpr double kCiderSigma = 6.0;

using NGram = std::vector<std::string>;
using Counts = std::map<NGram, double>;

Counts ngram_counts(const Tokens& toks, std::size_t n) {
    Counts out;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        out[NGram(toks.begin() + std::ptrdiff_t(i), toks.begin() + std::ptrdiff_t(i + n))] += 1.0;
    }
    return out;
}

std::size_t closest_ref_length(std::size_t c, const std::vector<Tokens>& refs) {
    std::size_t best = refs.front().size();
    for (const auto& r : refs) {
        const auto d = [c](std::size_t x) { return x > c ? x - c : c - x; };
        if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) {
            best = r.size();
        }
    }
    return best;
}

struct BleuCounts {
    std::array<double, kMaxN> matches{};
    std::array<double, kMaxN> totals{};
    double hyp_len = 0.0;
    double ref_len = 0.0;

    void add(const Tokens& hyp, const std::vector<Tokens>& refs) {
        for (std::size_t n = 1; n <= kMaxN; ++n) {
            Counts max_ref;
            for (const auto& r : refs) {
                for (const auto& [g, k] : ngram_counts(r, n)) {
                    max_ref[g] = std::max(max_ref[g], k);
                }
            }
            for (const auto& [g, k] : ngram_counts(hyp, n)) {
                auto it = max_ref.find(g);
                matches[n - 1] += it == max_ref.end() ? 0.0 : std::min(k, it->second);
            }
            totals[n - 1] += hyp.size() >= n ? double(hyp.size() - n + 1) : 0.0;
        }
        hyp_len += double(hyp.size());
        ref_len += double(closest_ref_length(hyp.size(), refs));
    }

    double score() const {
        if (hyp_len == 0.0) {
            return 0.0;
        }
        double log_p = 0.0;
        for (int n = 0; n < kMaxN; ++n) {
            log_p += std::log(std::max(matches[n], kSmoothing) / std::max(totals[n], 1.0));
        }
        const double bp = hyp_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
        return bp * std::exp(log_p / kMaxN);
    }
};

void require_refs(const std::vector<Tokens>& refs) {
    if (refs.empty()) {
        throw std::invalid_argument("metrics: at least one reference is required");
    }
}

} // namespace

double bleu4(const Tokens& hyp, const std::vector<Tokens>& refs) {
    require_refs(refs);
    BleuCounts c;
    if (!hyp.empty()) {
        c.add(hyp, refs);
    }
    return c.score();
}

double corpus_bleu4(const std::vector<Tokens>& hyps, const std::vector<std::vector<Tokens>>& refs) {
    if (hyps.size() != refs.size()) {
        throw std::invalid_argument("corpus_bleu4: hypothesis and reference counts differ");
    }
    BleuCounts c;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
        require_refs(refs[i]);
        if (!hyps[i].empty()) {
            c.add(hyps[i], refs[i]);
        }
    }
    return c.score();
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (const auto& x : a) {
        for (std::size_t j = 0; j < b.size(); ++j) {
            cur[j + 1] = x == b[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double rouge_l(const Tokens& hyp, const std::vector<Tokens>& refs, double beta) {
    require_refs(refs);
    if (hyp.empty()) {
        return 0.0;
    }
    double best = 0.0;
    const double b2 = beta * beta;
    for (const auto& r : refs) {
        const double l = double(lcs_length(hyp, r));
        if (l == 0.0) {
            continue;
        }
        const double p = l / double(hyp.size()), rec = l / double(r.size());
        best = std::max(best, (1.0 + b2) * p * rec / (rec + b2 * p));
    }
    return best;
}

CiderResult cider_d(const std::vector<Tokens>& hyps, const std::vector<std::vector<Tokens>>& refs) {
    if (hyps.size() != refs.size()) {
        throw std::invalid_argument("cider_d: hypothesis and reference counts differ");
    }
    CiderResult out;
    if (hyps.empty()) {
        return out;
    }
    std::map<NGram, double> doc_freq;
    for (const auto& item : refs) {
        require_refs(item);
        std::set<NGram> seen;
        for (const auto& r : item) {
            for (std::size_t n = 1; n <= kMaxN; ++n) {
                for (const auto& [g, _] : ngram_counts(r, n)) {
                    seen.insert(g);
                }
            }
        }
        for (const auto& g : seen) {
            doc_freq[g] += 1.0;
        }
    }
    const double log_docs = std::log(double(refs.size()));

    struct Vec {
        std::array<Counts, kMaxN> w;
        std::array<double, kMaxN> norm{};
        double length = 0.0;
    };
    auto weigh = [&](const Tokens& toks) {
        Vec v;
        v.length = double(toks.size());
        for (std::size_t n = 1; n <= kMaxN; ++n) {
            for (const auto& [g, tf] : ngram_counts(toks, n)) {
                auto it = doc_freq.find(g);
                const double df = it == doc_freq.end() ? 0.0 : it->second;
                const double x = tf * (log_docs - std::log(std::max(1.0, df)));
                v.w[n - 1][g] = x;
                v.norm[n - 1] += x * x;
            }
            v.norm[n - 1] = std::sqrt(v.norm[n - 1]);
        }
        return v;
    };
    auto similarity = [](const Vec& h, const Vec& r) {
        const double delta = h.length - r.length;
        const double penalty = std::exp(-(delta * delta) / (2.0 * kCiderSigma * kCiderSigma));
        double total = 0.0;
        for (int n = 0; n < kMaxN; ++n) {
            double val = 0.0;
            for (const auto& [g, x] : h.w[n]) {
                auto it = r.w[n].find(g);
                if (it != r.w[n].end()) {
                    val += std::min(x, it->second) * it->second;
                }
            }
            if (h.norm[n] != 0.0 && r.norm[n] != 0.0) {
                val /= h.norm[n] * r.norm[n];
            }
            total += val * penalty;
        }
        return total / kMaxN;
    };

    double sum = 0.0;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
        const Vec h = weigh(hyps[i]);
        double acc = 0.0;
        for (const auto& r : refs[i]) {
            acc += similarity(h, weigh(r));
        }
        out.per_image.push_back(10.0 * acc / double(refs[i].size()));
        sum += out.per_image.back();
    }
    out.score = sum / double(hyps.size());
    return out;
}

EvalReport score_corpus(const std::string& split, const std::vector<std::string>& ids,
                        const std::vector<std::string>& hyps, const std::vector<std::vector<std::string>>& refs,
                        double rouge_beta) {
    if (ids.size() != hyps.size() || hyps.size() != refs.size()) {
        throw std::invalid_argument("score_corpus: ids, hypotheses and references must have equal length");
    }
    std::vector<Tokens> th;
    std::vector<std::vector<Tokens>> tr;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
        if (refs[i].empty()) {
            throw std::invalid_argument("score_corpus: item " + ids[i] + " has no references");
        }
        th.push_back(tokenize(hyps[i]));
        tr.emplace_back();
        for (const auto& r : refs[i]) {
            tr.back().push_back(tokenize(r));
        }
    }
    EvalReport rep;
    rep.split = split;
    rep.n_examples = hyps.size();
    const CiderResult cider = cider_d(th, tr);
    rep.cider_d = cider.score;
    rep.bleu4 = corpus_bleu4(th, tr);
    double rouge_sum = 0.0;
    for (std::size_t i = 0; i < th.size(); ++i) {
        ExampleScore ex{ids[i], normalize(hyps[i]), bleu4(th[i], tr[i]), rouge_l(th[i], tr[i], rouge_beta),
                        cider.per_image[i]};
        rouge_sum += ex.rouge_l;
        rep.per_example.push_back(std::move(ex));
    }
    rep.rouge_l = th.empty() ? 0.0 : rouge_sum / double(th.size());
    return rep;
}

std::string report_to_json(const EvalReport& report, double display_scale, bool per_example) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["split"] = report.split;
    j["bleu4"] = report.bleu4 * display_scale;
    j["rouge_l"] = report.rouge_l * display_scale;
    j["cider_d"] = report.cider_d * display_scale;
    j["n_examples"] = report.n_examples;
    j["per_example"] = ordered_json::array();
    if (per_example) {
        for (const auto& ex : report.per_example) {
            j["per_example"].push_back(ordered_json{{"id", ex.id},
                                                    {"hypothesis", ex.hypothesis},
                                                    {"bleu4", ex.bleu4 * display_scale},
                                                    {"rouge_l", ex.rouge_l * display_scale},
                                                    {"cider_d", ex.cider_d * display_scale}});
        }
    }
    return j.dump(2);
}

} // namespace l2c
