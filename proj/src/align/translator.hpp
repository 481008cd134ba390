#pragma once

#include <string>
#include <vector>

#include "core/types.hpp"

namespace xkde::align {

// Conditional translation-model surface: force-decode a gold target-language
// text given a candidate response and report per-token log-probabilities.
// Deterministic by contract.
class Translator {
public:
    virtual ~Translator() = default;

    virtual bool supports(const LanguageCode& tgt) const = 0;

    // Maximum combined token count (response + gold) per call.
    virtual int context_limit() const = 0;

    // log P(gold_target[t] | response, gold_target[<t]) for every gold
    // token (toy token rule). Throws UnsupportedPair for languages outside
    // supports(), ContextOverflow past context_limit().
    virtual std::vector<double> forced_score(const std::string& response,
                                             const std::string& gold_target,
                                             const LanguageCode& tgt) const = 0;

    virtual bool concurrent_read_safe() const { return false; }
};

} // namespace xkde::align
