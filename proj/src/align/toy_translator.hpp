#pragma once

#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "align/translator.hpp"

namespace xkde::align {

// Deterministic noisy-channel table over the toy vocabulary. Each gold token
// g gets probability
//
//     p(g | response) = (1 + beta * m(g)) / (V + beta * M)
//
// where m(g) counts response tokens equivalent to g, M is the sum of m over
// the whole vocabulary, and V the vocabulary size — a proper distribution
// whose per-token scores rise with lexical overlap. Equivalence defaults to
// exact token identity; synonym groups (e.g. translation pairs) can be
// registered so cross-lingual matches count too. Language marker tokens are
// ordinary singleton tokens, so they only ever match exactly.
class ToyTranslator : public Translator {
public:
    // vocabulary: every token the channel can emit. Unknown gold tokens
    // still score (at floor probability unless matched) but are not part of
    // the normalizing vocabulary. Empty supported set = all languages.
    explicit ToyTranslator(std::vector<std::string> vocabulary, double beta = 8.0,
                           std::set<std::string> supported_targets = {});

    // Make every token in the group interchangeable for matching.
    void add_equivalence(const std::vector<std::string>& group);

    bool supports(const LanguageCode& tgt) const override;
    int context_limit() const override { return 4096; }
    std::vector<double> forced_score(const std::string& response,
                                     const std::string& gold_target,
                                     const LanguageCode& tgt) const override;
    bool concurrent_read_safe() const override { return true; }

    double beta() const { return beta_; }
    int vocab_size() const { return static_cast<int>(vocabulary_.size()); }

private:
    int class_of(const std::string& token) const;

    std::vector<std::string> vocabulary_;
    double beta_;
    std::set<std::string> supported_;
    std::unordered_map<std::string, int> classes_; // token -> equivalence class
    int next_class_ = 0;
};

} // namespace xkde::align
