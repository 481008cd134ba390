#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace xkde::lm {

// Similarity function used to pick which stored edits are relevant to a
// query. Implementations must be deterministic and side-effect free.
class EditRetriever {
public:
    virtual ~EditRetriever() = default;
    virtual double similarity(const std::string& query,
                              const EditDescriptor& descriptor) const = 0;
};

// Character-trigram cosine similarity over lowercased text. Language
// agnostic and dependency free; embedding-based retrievers can be plugged
// in through the EditRetriever interface.
class TrigramRetriever : public EditRetriever {
public:
    double similarity(const std::string& query,
                      const EditDescriptor& descriptor) const override;
};

// External store of edit descriptors: the model itself never changes, edits
// are injected by prepending retrieved descriptors to the prompt. Insertion
// order is preserved and breaks retrieval ties (earliest wins).
class EditMemory {
public:
    EditMemory();
    explicit EditMemory(std::shared_ptr<const EditRetriever> retriever);

    void insert(const EditDescriptor& descriptor);
    void clear();
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const EditDescriptor& at(std::size_t i) const { return entries_.at(i); }

    // Indices of the top-k entries by similarity, best first; ties keep
    // insertion order. k beyond size() returns everything.
    std::vector<std::size_t> retrieve(const std::string& query, std::size_t k) const;

private:
    std::vector<EditDescriptor> entries_;
    std::shared_ptr<const EditRetriever> retriever_;
};

// Shared prompt frame (training and inference use the identical bytes).
std::string edit_block(const std::string& edit_text);
std::string query_frame(const std::string& query);

// Retrieves the top-k edits and wraps the query in the training-time frame:
// one "[Edit description]: ..." line per retrieved edit (best match first),
// then "[Query]: ...\n[Answer]: ". An empty memory is not an error: the
// frame is emitted with no edit lines and *empty_memory (when given) is set,
// so callers can tell an unedited prompt apart.
std::string retrieve_and_prompt(const EditMemory& memory, const std::string& query,
                                std::size_t k, bool* empty_memory = nullptr);

} // namespace xkde::lm
