#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lm/edit_memory.hpp"
#include "lm/scoring_model.hpp"
#include "lm/vocab.hpp"
#include "metrics/metrics.hpp"

namespace xkde::lm {

// Text-level greedy decoder over a token-level model: wraps the query in the
// shared prompt frame (prepending edits retrieved from memory, when one is
// attached), tokenizes, decodes, and detokenizes. A null memory produces the
// plain no-edit frame — that is the "base model" view used for locality.
class PromptedDecoder : public metrics::Decoder {
public:
    PromptedDecoder(std::shared_ptr<const ScoringModel> model,
                    std::shared_ptr<const ToyVocab> vocab,
                    std::shared_ptr<const EditMemory> memory, std::size_t top_k,
                    int max_new_tokens = 64);

    std::vector<std::string> decode(const std::string& query) const override;
    bool concurrent_read_safe() const override;

    // The exact prompt text a query produces (for logging and tests).
    std::string prompt_for(const std::string& query) const;

private:
    std::shared_ptr<const ScoringModel> model_;
    std::shared_ptr<const ToyVocab> vocab_;
    std::shared_ptr<const EditMemory> memory_;
    std::size_t top_k_;
    int max_new_tokens_;
};

} // namespace xkde::lm
