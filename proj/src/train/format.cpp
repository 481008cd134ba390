#include "train/format.hpp"

#include "common/errors.hpp"
#include "common/log.hpp"
#include "lm/edit_memory.hpp"

namespace xkde::train {

FormattedExample format_example(const ParallelSample& sample, const lm::ToyVocab& vocab,
                                std::size_t max_length) {
    validate_sample(sample);
    FormattedExample ex;
    if (sample.with_edit) ex.prompt_text = lm::edit_block(*sample.edit_text);
    ex.prompt_text += lm::query_frame(sample.query);

    const std::vector<int> prompt = vocab.encode(ex.prompt_text);
    std::vector<int> answer = vocab.encode(sample.answer);
    answer.push_back(lm::ToyVocab::kEos);

    ex.prompt_len = prompt.size();
    ex.answer_len = answer.size();
    ex.tokens = prompt;
    ex.tokens.insert(ex.tokens.end(), answer.begin(), answer.end());
    if (ex.tokens.size() > max_length) {
        throw OverLength("sample '" + sample.id + "' formats to " +
                         std::to_string(ex.tokens.size()) + " tokens (limit " +
                         std::to_string(max_length) + ")");
    }
    ex.labels = ex.tokens;
    ex.mask.assign(ex.tokens.size(), 0.0);
    for (std::size_t t = ex.prompt_len; t < ex.tokens.size(); ++t) ex.mask[t] = 1.0;
    return ex;
}

std::vector<FormattedExample> format_dataset(const std::vector<ParallelSample>& samples,
                                             const lm::ToyVocab& vocab,
                                             std::size_t max_length) {
    std::vector<FormattedExample> out;
    out.reserve(samples.size());
    std::size_t skipped = 0;
    for (const auto& s : samples) {
        try {
            out.push_back(format_example(s, vocab, max_length));
        } catch (const OverLength& e) {
            log_warn(std::string("skipping over-length sample: ") + e.what());
            ++skipped;
        }
    }
    if (skipped > 0) {
        log_info(std::to_string(skipped) + " of " + std::to_string(samples.size()) +
                 " samples skipped as over-length");
    }
    return out;
}

} // namespace xkde::train
