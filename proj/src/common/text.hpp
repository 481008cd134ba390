#pragma once

#include <string>
#include <vector>

namespace xkde {

// Toy tokenization rule shared by dataset statistics and the toy vocabulary:
// split on ASCII whitespace; ASCII punctuation (except '_') becomes its own
// single-character token; everything else, including multi-byte UTF-8, is a
// word character. "[Query]: who?" -> {"[", "Query", "]", ":", "who", "?"}.
std::vector<std::string> split_tokens(const std::string& text);

std::string join_tokens(const std::vector<std::string>& tokens);

std::string trim(const std::string& s);
std::string to_lower(const std::string& s);
bool starts_with(const std::string& s, const std::string& prefix);
bool ends_with(const std::string& s, const std::string& suffix);
bool contains(const std::string& s, const std::string& needle);
std::vector<std::string> split_lines(const std::string& text);
std::string replace_all(std::string s, const std::string& from, const std::string& to);

} // namespace xkde
