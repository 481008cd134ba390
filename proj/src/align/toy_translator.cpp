#include "align/toy_translator.hpp"

#include <cmath>

#include "common/errors.hpp"
#include "common/text.hpp"

namespace xkde::align {

ToyTranslator::ToyTranslator(std::vector<std::string> vocabulary, double beta,
                             std::set<std::string> supported_targets)
    : vocabulary_(std::move(vocabulary)), beta_(beta), supported_(std::move(supported_targets)) {
    if (beta_ <= 0.0) throw ConfigError("toy translator beta must be positive");
    for (const auto& token : vocabulary_) {
        if (!classes_.count(token)) classes_.emplace(token, next_class_++);
    }
}

void ToyTranslator::add_equivalence(const std::vector<std::string>& group) {
    if (group.empty()) return;
    // Merge the whole group into the class of its first member.
    const int cls = class_of(group.front()) >= 0 ? classes_[group.front()] : next_class_++;
    for (const auto& token : group) classes_[token] = cls;
}

int ToyTranslator::class_of(const std::string& token) const {
    auto it = classes_.find(token);
    return it == classes_.end() ? -1 : it->second;
}

bool ToyTranslator::supports(const LanguageCode& tgt) const {
    return supported_.empty() || supported_.count(tgt.str()) != 0;
}

std::vector<double> ToyTranslator::forced_score(const std::string& response,
                                                const std::string& gold_target,
                                                const LanguageCode& tgt) const {
    if (!supports(tgt)) {
        throw UnsupportedPair("toy translator does not cover target language '" + tgt.str() +
                              "'");
    }
    const std::vector<std::string> resp = split_tokens(response);
    const std::vector<std::string> gold = split_tokens(gold_target);
    if (static_cast<int>(resp.size() + gold.size()) > context_limit()) {
        throw ContextOverflow(static_cast<int>(resp.size() + gold.size()), context_limit());
    }

    // Matches per equivalence class present in the response, plus the mass
    // M the response injects across the whole vocabulary.
    std::unordered_map<int, int> class_hits;
    std::unordered_map<std::string, int> exact_hits;
    for (const auto& r : resp) {
        const int cls = class_of(r);
        if (cls >= 0) {
            ++class_hits[cls];
        } else {
            ++exact_hits[r]; // unknown tokens still match themselves
        }
    }
    std::unordered_map<int, int> class_sizes;
    for (const auto& token : vocabulary_) ++class_sizes[classes_.at(token)];
    double M = 0.0;
    for (const auto& [cls, hits] : class_hits) {
        auto it = class_sizes.find(cls);
        if (it != class_sizes.end()) M += static_cast<double>(hits) * it->second;
    }

    const double V = static_cast<double>(vocabulary_.size());
    const double denom = V + beta_ * M;
    std::vector<double> out;
    out.reserve(gold.size());
    for (const auto& g : gold) {
        const int cls = class_of(g);
        double m = 0.0;
        if (cls >= 0) {
            auto it = class_hits.find(cls);
            if (it != class_hits.end()) m = it->second;
        } else {
            auto it = exact_hits.find(g);
            if (it != exact_hits.end()) m = it->second;
        }
        out.push_back(std::log((1.0 + beta_ * m) / denom));
    }
    return out;
}

} // namespace xkde::align
