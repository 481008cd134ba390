#include "lm/prompted_decoder.hpp"

#include "common/errors.hpp"
#include "common/log.hpp"

namespace xkde::lm {

PromptedDecoder::PromptedDecoder(std::shared_ptr<const ScoringModel> model,
                                 std::shared_ptr<const ToyVocab> vocab,
                                 std::shared_ptr<const EditMemory> memory, std::size_t top_k,
                                 int max_new_tokens)
    : model_(std::move(model)),
      vocab_(std::move(vocab)),
      memory_(std::move(memory)),
      top_k_(top_k),
      max_new_tokens_(max_new_tokens) {
    if (!model_ || !vocab_) throw ModelError("prompted decoder needs a model and a vocabulary");
}

std::string PromptedDecoder::prompt_for(const std::string& query) const {
    if (!memory_ || memory_->empty()) return query_frame(query);
    return retrieve_and_prompt(*memory_, query, top_k_);
}

std::vector<std::string> PromptedDecoder::decode(const std::string& query) const {
    std::vector<int> ids = vocab_->encode(prompt_for(query));
    // Keep the most recent tokens (the query frame sits at the end) if a
    // pile of retrieved edits ever pushes the prompt past the window.
    const int budget = model_->context_limit() - max_new_tokens_;
    if (static_cast<int>(ids.size()) > budget && budget > 0) {
        log_warn("prompt of " + std::to_string(ids.size()) +
                 " tokens truncated to the last " + std::to_string(budget));
        ids.erase(ids.begin(), ids.end() - budget);
    }
    return vocab_->tokens_of(model_->greedy_decode(ids, max_new_tokens_));
}

bool PromptedDecoder::concurrent_read_safe() const { return model_->concurrent_read_safe(); }

} // namespace xkde::lm
