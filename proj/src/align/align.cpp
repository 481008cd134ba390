#include "align/align.hpp"

#include <algorithm>
#include <numeric>

#include "common/errors.hpp"
#include "common/text.hpp"

namespace xkde::align {

AlignmentScore alignment_score(const Translator& translator, const std::string& response,
                               const std::string& gold_target, const LanguageCode& tgt,
                               bool raw_logprob) {
    if (split_tokens(gold_target).empty()) {
        throw EmptyGold("alignment scoring needs a non-empty gold target");
    }
    const std::vector<double> lp = translator.forced_score(response, gold_target, tgt);
    AlignmentScore score;
    score.n_tokens = lp.size();
    const double total = std::accumulate(lp.begin(), lp.end(), 0.0);
    score.value = raw_logprob ? total : total / static_cast<double>(lp.size());
    return score;
}

std::vector<std::size_t> rank(const std::vector<std::string>& responses,
                              const std::string& gold_target, const Translator& translator,
                              const LanguageCode& tgt, bool raw_logprob) {
    if (responses.empty()) throw EmptyResponses("nothing to rank");
    std::vector<double> values(responses.size());
    for (std::size_t i = 0; i < responses.size(); ++i) {
        values[i] = alignment_score(translator, responses[i], gold_target, tgt, raw_logprob).value;
    }
    std::vector<std::size_t> order(responses.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&values](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return order;
}

} // namespace xkde::align
