#include "lm/edit_memory.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "common/log.hpp"
#include "common/text.hpp"

namespace xkde::lm {

namespace {

std::unordered_map<std::string, double> trigram_counts(const std::string& raw) {
    const std::string text = to_lower(raw);
    std::unordered_map<std::string, double> counts;
    if (text.empty()) return counts;
    if (text.size() < 3) {
        counts[text] = 1.0;
        return counts;
    }
    for (std::size_t i = 0; i + 3 <= text.size(); ++i) counts[text.substr(i, 3)] += 1.0;
    return counts;
}

double cosine(const std::unordered_map<std::string, double>& a,
              const std::unordered_map<std::string, double>& b) {
    if (a.empty() || b.empty()) return 0.0;
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    double dot = 0.0;
    for (const auto& [gram, na] : small) {
        auto it = large.find(gram);
        if (it != large.end()) dot += na * it->second;
    }
    double norm_a = 0.0, norm_b = 0.0;
    for (const auto& [gram, n] : a) norm_a += n * n;
    for (const auto& [gram, n] : b) norm_b += n * n;
    if (dot == 0.0) return 0.0;
    return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

} // namespace

double TrigramRetriever::similarity(const std::string& query,
                                    const EditDescriptor& descriptor) const {
    return cosine(trigram_counts(query), trigram_counts(serialize_edit(descriptor)));
}

EditMemory::EditMemory() : retriever_(std::make_shared<TrigramRetriever>()) {}

EditMemory::EditMemory(std::shared_ptr<const EditRetriever> retriever)
    : retriever_(std::move(retriever)) {
    if (!retriever_) retriever_ = std::make_shared<TrigramRetriever>();
}

void EditMemory::insert(const EditDescriptor& descriptor) { entries_.push_back(descriptor); }

void EditMemory::clear() { entries_.clear(); }

std::vector<std::size_t> EditMemory::retrieve(const std::string& query, std::size_t k) const {
    std::vector<std::size_t> order(entries_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> score(entries_.size());
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        score[i] = retriever_->similarity(query, entries_[i]);
    }
    // Stable sort on descending score keeps insertion order among ties.
    std::stable_sort(order.begin(), order.end(),
                     [&score](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    if (order.size() > k) order.resize(k);
    return order;
}

std::string edit_block(const std::string& edit_text) {
    return "[Edit description]: " + edit_text + "\n";
}

std::string query_frame(const std::string& query) {
    return "[Query]: " + query + "\n[Answer]: ";
}

std::string retrieve_and_prompt(const EditMemory& memory, const std::string& query,
                                std::size_t k, bool* empty_memory) {
    if (empty_memory) *empty_memory = memory.empty();
    std::string prompt;
    if (memory.empty()) {
        log_warn("edit memory is empty; prompting without an edit block");
    } else {
        for (std::size_t idx : memory.retrieve(query, k)) {
            prompt += edit_block(serialize_edit(memory.at(idx)));
        }
    }
    prompt += query_frame(query);
    return prompt;
}

} // namespace xkde::lm
