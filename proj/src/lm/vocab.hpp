#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "core/types.hpp"

namespace xkde::lm {

// Word-level toy vocabulary over the toy token rule (whitespace+punctuation
// split). Ids 0..3 are reserved specials; unknown words map to <unk>.
// Language marker tokens ("⟨en⟩", "⟨zh⟩", ...) are ordinary vocabulary words,
// which makes "answered in the right language" a plain token comparison.
class ToyVocab {
public:
    static constexpr int kPad = 0;
    static constexpr int kBos = 1;
    static constexpr int kEos = 2;
    static constexpr int kUnk = 3;

    ToyVocab();
    explicit ToyVocab(const std::vector<std::string>& words);

    // Collect the vocabulary from raw text (deduplicated, insertion order).
    void add_text(const std::string& text);
    void add_word(const std::string& word);

    int size() const { return static_cast<int>(tokens_.size()); }
    int id(const std::string& token) const;
    const std::string& token(int id) const;
    bool has(const std::string& token) const { return index_.count(token) != 0; }

    std::vector<int> encode(const std::string& text) const;
    std::vector<std::string> pieces(const std::string& text) const;
    std::string decode(const std::vector<int>& ids) const;
    std::vector<std::string> tokens_of(const std::vector<int>& ids) const;

    // Marker token for a language ("⟨en⟩").
    static std::string marker(const LanguageCode& lang);

    void save(const std::string& path) const;
    static ToyVocab load(const std::string& path);

    bool operator==(const ToyVocab& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

} // namespace xkde::lm
