#pragma once

#include <memory>
#include <string>
#include <vector>

#include "data/chat_client.hpp"
#include "lm/edit_memory.hpp"
#include "metrics/metrics.hpp"

namespace xkde::lm {

// Decoder view of a chat-completion service: the query is wrapped in the
// same prompt frame as the toy decoder (edits retrieved from memory, null
// memory = the plain no-edit frame), sent at temperature 0, and the first
// non-empty line of the completion is tokenized as the answer. This is the
// adapter used when the evaluated model lives behind an endpoint.
class RemoteDecoder : public metrics::Decoder {
public:
    RemoteDecoder(std::shared_ptr<data::ChatClient> client, std::string model_name,
                  std::shared_ptr<const EditMemory> memory, std::size_t top_k,
                  int max_new_tokens);

    std::vector<std::string> decode(const std::string& query) const override;
    // Chat clients synchronize internally (the builder already fans out over
    // them), so concurrent scoring is allowed.
    bool concurrent_read_safe() const override { return true; }

    std::string prompt_for(const std::string& query) const;

private:
    std::shared_ptr<data::ChatClient> client_;
    std::string model_name_;
    std::shared_ptr<const EditMemory> memory_;
    std::size_t top_k_;
    int max_new_tokens_;
};

} // namespace xkde::lm
