#include "lm/vocab.hpp"

#include <fstream>

#include "common/errors.hpp"
#include "common/text.hpp"

namespace xkde::lm {

namespace {
const std::vector<std::string> kSpecials = {"<pad>", "<bos>", "<eos>", "<unk>"};
} // namespace

ToyVocab::ToyVocab() {
    for (const auto& s : kSpecials) {
        index_.emplace(s, static_cast<int>(tokens_.size()));
        tokens_.push_back(s);
    }
}

ToyVocab::ToyVocab(const std::vector<std::string>& words) : ToyVocab() {
    for (const auto& w : words) add_word(w);
}

void ToyVocab::add_word(const std::string& word) {
    if (word.empty()) return;
    if (index_.count(word)) return;
    index_.emplace(word, static_cast<int>(tokens_.size()));
    tokens_.push_back(word);
}

void ToyVocab::add_text(const std::string& text) {
    for (const auto& w : split_tokens(text)) add_word(w);
}

int ToyVocab::id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
}

const std::string& ToyVocab::token(int id) const {
    if (id < 0 || id >= size()) {
        throw ModelError("token id " + std::to_string(id) + " outside vocabulary of " +
                         std::to_string(size()));
    }
    return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> ToyVocab::encode(const std::string& text) const {
    std::vector<int> out;
    for (const auto& w : split_tokens(text)) out.push_back(id(w));
    return out;
}

std::vector<std::string> ToyVocab::pieces(const std::string& text) const {
    return split_tokens(text);
}

std::string ToyVocab::decode(const std::vector<int>& ids) const {
    return join_tokens(tokens_of(ids));
}

std::vector<std::string> ToyVocab::tokens_of(const std::vector<int>& ids) const {
    std::vector<std::string> words;
    words.reserve(ids.size());
    for (int i : ids) words.push_back(token(i));
    return words;
}

std::string ToyVocab::marker(const LanguageCode& lang) {
    return "⟨" + lang.str() + "⟩";
}

void ToyVocab::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocabulary file: " + path);
    // Specials are implicit; persist only the real words, one per line.
    for (int i = static_cast<int>(kSpecials.size()); i < size(); ++i) {
        out << tokens_[static_cast<std::size_t>(i)] << '\n';
    }
    if (!out.good()) throw DataError("short write on vocabulary file: " + path);
}

ToyVocab ToyVocab::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read vocabulary file: " + path);
    ToyVocab v;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (!line.empty()) v.add_word(line);
    }
    return v;
}

} // namespace xkde::lm
