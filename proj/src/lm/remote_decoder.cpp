#include "lm/remote_decoder.hpp"

#include <utility>

#include "common/text.hpp"

namespace xkde::lm {

RemoteDecoder::RemoteDecoder(std::shared_ptr<data::ChatClient> client, std::string model_name,
                             std::shared_ptr<const EditMemory> memory, std::size_t top_k,
                             int max_new_tokens)
    : client_(std::move(client)),
      model_name_(std::move(model_name)),
      memory_(std::move(memory)),
      top_k_(top_k),
      max_new_tokens_(max_new_tokens) {}

std::string RemoteDecoder::prompt_for(const std::string& query) const {
    if (!memory_) return query_frame(query);
    return retrieve_and_prompt(*memory_, query, top_k_);
}

std::vector<std::string> RemoteDecoder::decode(const std::string& query) const {
    data::ChatRequest request;
    request.model = model_name_;
    request.messages = {{"user", prompt_for(query)}};
    request.temperature = 0.0;
    request.max_tokens = max_new_tokens_;

    const std::string completion = client_->complete(request);
    for (const auto& line : split_lines(completion)) {
        const std::string answer = trim(line);
        if (!answer.empty()) return split_tokens(answer);
    }
    return {};
}

} // namespace xkde::lm
