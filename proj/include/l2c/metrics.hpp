#pragma once

// Caption metrics against multiple references. Inputs are token lists as
// produced by l2c::tokenize. BLEU-4 and ROUGE-L lie in [0, 1], CIDEr-D in
// [0, 10].

#include <string>
#include <vector>

namespace l2c {

using Tokens = std::vector<std::string>;

// Zero n-gram matches are replaced by 1e-9 before the geometric mean; the
// brevity penalty uses the closest reference length (shorter wins ties).
// An empty hypothesis scores 0.
double bleu4(const Tokens& hyp, const std::vector<Tokens>& refs);
// Pools clipped counts and lengths over the corpus before combining.
double corpus_bleu4(const std::vector<Tokens>& hyps, const std::vector<std::vector<Tokens>>& refs);

std::size_t lcs_length(const Tokens& a, const Tokens& b);
// LCS F-measure, maximised over references.
double rouge_l(const Tokens& hyp, const std::vector<Tokens>& refs, double beta = 1.0);

struct CiderResult {
    double score = 0.0;             // corpus mean
    std::vector<double> per_image;  // one per hypothesis
};

// Document frequencies come from the references of this corpus only, so a
// single-image corpus has idf 0 everywhere and scores 0.
CiderResult cider_d(const std::vector<Tokens>& hyps, const std::vector<std::vector<Tokens>>& refs);

struct ExampleScore {
    std::string id;
    std::string hypothesis;
    double bleu4 = 0.0;
    double rouge_l = 0.0;
    double cider_d = 0.0;
};

struct EvalReport {
    std::string split;
    double bleu4 = 0.0;    // corpus BLEU-4
    double rouge_l = 0.0;  // mean sentence ROUGE-L
    double cider_d = 0.0;
    std::size_t n_examples = 0;
    std::vector<ExampleScore> per_example;
};

// Tokenizes hypotheses and references with the data normalizer and scores
// the corpus. Throws std::invalid_argument when sizes disagree or an item
// has no references.
EvalReport score_corpus(const std::string& split, const std::vector<std::string>& ids,
                        const std::vector<std::string>& hyps, const std::vector<std::vector<std::string>>& refs,
                        double rouge_beta = 1.0);

// JSON text of the report. `display_scale` multiplies every score (100 gives
// the percentage-style presentation).
std::string report_to_json(const EvalReport& report, double display_scale = 1.0, bool per_example = true);

} // namespace l2c
