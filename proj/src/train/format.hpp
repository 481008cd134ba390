#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "core/types.hpp"
#include "lm/vocab.hpp"

namespace xkde::train {

// One training sequence: prompt tokens followed by answer tokens plus the
// end-of-sequence token. The loss mask is 1.0 exactly on the answer span
// (including eos) and 0.0 on the prompt; labels[t] mirrors tokens[t] and
// only answer-slot labels are ever consumed by a loss.
struct FormattedExample {
    std::string prompt_text;
    std::vector<int> tokens;
    std::vector<int> labels;
    std::vector<double> mask;
    std::size_t prompt_len = 0;
    std::size_t answer_len = 0; // m >= 1 (eos included)

    std::vector<int> prompt_tokens() const {
        return {tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(prompt_len)};
    }
    std::vector<int> answer_labels() const {
        return {labels.begin() + static_cast<std::ptrdiff_t>(prompt_len), labels.end()};
    }
};

// Renders the prompt frame for a sample: an optional edit block, then the
// query/answer frame. The answer span is the tokenized answer plus eos.
// Throws OverLength when the full sequence exceeds max_length.
FormattedExample format_example(const ParallelSample& sample, const lm::ToyVocab& vocab,
                                std::size_t max_length = 2560);

// Formats a whole dataset, skipping (and logging) over-length samples.
std::vector<FormattedExample> format_dataset(const std::vector<ParallelSample>& samples,
                                             const lm::ToyVocab& vocab,
                                             std::size_t max_length = 2560);

} // namespace xkde::train
