#ifndef FC2_CORE_HPP_
#define FC2_CORE_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fc2 {

// A token is a non-empty whitespace-free string. The reserved empty token
// (rendered as "Ø" in human-readable output) is represented by the empty
// string; tokenize() never produces it.
using Token = std::string;

inline const Token kEmptyToken{};

inline bool is_empty_token(const Token& t) { return t.empty(); }

using Sentence = std::vector<Token>;

struct BeamSet {
  std::string utterance_id;
  std::vector<Sentence> candidates;  // beam order, index 0 = top-scored
  std::optional<Sentence> reference;
};

enum class TokenizeMode { Whitespace, Character };

// Byte length of the UTF-8 sequence starting at `lead`.
inline std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;  // invalid lead byte, treat as a single unit
}

inline bool is_space_byte(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// Whitespace mode splits on runs of whitespace; character mode splits into
// UTF-8 codepoints, dropping whitespace. Empty text gives an empty sentence.
inline Sentence tokenize(std::string_view text, TokenizeMode mode) {
  Sentence out;
  if (mode == TokenizeMode::Whitespace) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && is_space_byte(text[i])) ++i;
      std::size_t start = i;
      while (i < text.size() && !is_space_byte(text[i])) ++i;
      if (i > start) out.emplace_back(text.substr(start, i - start));
    }
  } else {
    std::size_t i = 0;
    while (i < text.size()) {
      std::size_t n = utf8_len(static_cast<unsigned char>(text[i]));
      if (n > text.size() - i) n = text.size() - i;
      if (!(n == 1 && is_space_byte(text[i])))
        out.emplace_back(text.substr(i, n));
      i += n;
    }
  }
  return out;
}

inline std::string detokenize(const Sentence& s, TokenizeMode mode) {
  std::string out;
  const char* sep = mode == TokenizeMode::Whitespace ? " " : "";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += sep;
    out += s[i];
  }
  return out;
}

// Edit counts against a reference. The rate is undefined when the reference
// is empty but edits were made; callers must check rate_defined() instead of
// relying on an infinity sentinel.
struct ErrorRate {
  std::size_t edits = 0;
  std::size_t ref_len = 0;

  bool rate_defined() const { return ref_len > 0 || edits == 0; }

  double rate() const {
    if (ref_len == 0) {
      if (edits == 0) return 0.0;
      throw std::domain_error("WER undefined: empty reference, non-empty hypothesis");
    }
    return static_cast<double>(edits) / static_cast<double>(ref_len);
  }

  // Corpus aggregation: sum edits and lengths, divide once.
  ErrorRate& operator+=(const ErrorRate& o) {
    edits += o.edits;
    ref_len += o.ref_len;
    return *this;
  }
};

// Token-level Levenshtein distance.
inline std::size_t levenshtein(const Sentence& a, const Sentence& b) {
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

inline ErrorRate wer(const Sentence& hyp, const Sentence& ref) {
  return ErrorRate{levenshtein(hyp, ref), ref.size()};
}

// Relative error-rate reduction of `improved` over `base`.
inline double werr(const ErrorRate& base, const ErrorRate& improved) {
  double b = base.rate();
  if (b <= 0.0) throw std::domain_error("WERR undefined: baseline rate is zero");
  return (b - improved.rate()) / b;
}

inline double werr(double base_rate, double improved_rate) {
  if (base_rate <= 0.0)
    throw std::domain_error("WERR undefined: baseline rate is zero");
  return (base_rate - improved_rate) / base_rate;
}

}  // namespace fc2

#endif  // FC2_CORE_HPP_
