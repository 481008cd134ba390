#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "align/translator.hpp"
#include "core/types.hpp"

namespace xkde::align {

// How well a candidate response supports regenerating the gold
// target-language answer through the translator.
struct AlignmentScore {
    double value = 0.0;      // mean (or raw-sum) log-probability, <= 0
    std::size_t n_tokens = 0; // gold token count, >= 1
};

// Force-decode gold_target through the translator conditioned on response.
// value = total log-prob / gold token count; raw_logprob switches to the
// unnormalized sum. Throws EmptyGold when gold_target has no tokens;
// UnsupportedPair/ContextOverflow propagate from the translator.
AlignmentScore alignment_score(const Translator& translator, const std::string& response,
                               const std::string& gold_target, const LanguageCode& tgt,
                               bool raw_logprob = false);

// Indices of responses sorted by descending alignment score; stable, so
// ties keep input order. Throws EmptyResponses on an empty list.
std::vector<std::size_t> rank(const std::vector<std::string>& responses,
                              const std::string& gold_target, const Translator& translator,
                              const LanguageCode& tgt, bool raw_logprob = false);

} // namespace xkde::align
