#pragma once
// Whitespace/punctuation tokenizer shared by question and relation text.

#include <string>
#include <string_view>
#include <vector>

namespace srkbqa {

// Lowercases the input and returns maximal runs of [a-z0-9]. Everything else
// (punctuation, underscores, unicode bytes) separates tokens, so the
// materialized inverse suffix "__inv" yields a standalone "inv" token.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      cur.push_back(static_cast<char>(c));
    } else if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

}  // namespace srkbqa
