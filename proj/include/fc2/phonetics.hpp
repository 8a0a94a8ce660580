#ifndef FC2_PHONETICS_HPP_
#define FC2_PHONETICS_HPP_

#include <algorithm>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fc2/core.hpp"

namespace fc2 {

using Phoneme = std::string;
using PhonemeSeq = std::vector<Phoneme>;

struct LexiconParseError : std::runtime_error {
  LexiconParseError(std::size_t line_no, const std::string& what)
      : std::runtime_error("lexicon line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
  std::size_t line;
};

// Pronunciation lexicon with a total lookup: tokens without an entry fall
// back to one phoneme per grapheme (UTF-8 codepoint), and the empty token
// maps to the empty sequence.
class Lexicon {
 public:
  Lexicon() = default;

  // Line format: "token<TAB>phoneme phoneme ...". Duplicate tokens keep the
  // last entry and a warning is recorded.
  static Lexicon load(std::istream& in, std::vector<std::string>* warnings = nullptr) {
    Lexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw LexiconParseError(line_no, "missing TAB separator");
      Token tok = line.substr(0, tab);
      if (tok.empty()) throw LexiconParseError(line_no, "empty token");
      PhonemeSeq seq;
      std::istringstream rest(line.substr(tab + 1));
      Phoneme p;
      while (rest >> p) seq.push_back(p);
      if (seq.empty()) throw LexiconParseError(line_no, "no phonemes");
      if (warnings && lex.entries_.count(tok))
        warnings->push_back("duplicate lexicon entry for '" + tok + "', last wins");
      lex.entries_[tok] = std::move(seq);
    }
    return lex;
  }

  void add(const Token& tok, PhonemeSeq seq) { entries_[tok] = std::move(seq); }

  bool contains(const Token& tok) const { return entries_.count(tok) > 0; }

  PhonemeSeq phonemes(const Token& tok) const {
    if (is_empty_token(tok)) return {};
    auto it = entries_.find(tok);
    if (it != entries_.end()) return it->second;
    // Grapheme fallback: one phoneme symbol per codepoint.
    PhonemeSeq seq;
    std::size_t i = 0;
    while (i < tok.size()) {
      std::size_t n = utf8_len(static_cast<unsigned char>(tok[i]));
      if (n > tok.size() - i) n = tok.size() - i;
      seq.push_back(tok.substr(i, n));
      i += n;
    }
    return seq;
  }

  const std::unordered_map<Token, PhonemeSeq>& entries() const { return entries_; }

  // All lexicon tokens in deterministic (sorted) order.
  std::vector<Token> tokens_sorted() const {
    std::vector<Token> v;
    v.reserve(entries_.size());
    for (const auto& [tok, _] : entries_) v.push_back(tok);
    std::sort(v.begin(), v.end());
    return v;
  }

 private:
  std::unordered_map<Token, PhonemeSeq> entries_;
};

inline std::size_t phoneme_edit_distance(const PhonemeSeq& a, const PhonemeSeq& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Negative phoneme edit distance; 0 iff the sequences are equal. Pairs with
// the empty token reduce to minus the other side's length.
inline int pron_similarity(const PhonemeSeq& a, const PhonemeSeq& b) {
  return -static_cast<int>(phoneme_edit_distance(a, b));
}

inline int pron_similarity(const Token& a, const Token& b, const Lexicon& lex) {
  return pron_similarity(lex.phonemes(a), lex.phonemes(b));
}

}  // namespace fc2

#endif  // FC2_PHONETICS_HPP_
