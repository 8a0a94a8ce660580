#ifndef FC2_TESTS_HELPERS_HPP_
#define FC2_TESTS_HELPERS_HPP_

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fc2/core.hpp"
#include "fc2/phonetics.hpp"
#include "fc2/rng.hpp"

namespace fc2::testing {

inline Lexicon shipped_lexicon() {
  std::ifstream in(std::string(FC2_DATA_DIR) + "/lexicon.txt");
  return Lexicon::load(in);
}

inline Sentence sent(const std::string& text) {
  return tokenize(text, TokenizeMode::Whitespace);
}

// Brute-force edit distance by exhaustive recursion; the independent oracle
// for the DP implementations. Exponential, keep inputs short.
inline std::size_t brute_edit_distance(const Sentence& a, const Sentence& b,
                                       std::size_t i = 0, std::size_t j = 0) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  std::size_t best = brute_edit_distance(a, b, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
  best = std::min(best, brute_edit_distance(a, b, i + 1, j) + 1);
  best = std::min(best, brute_edit_distance(a, b, i, j + 1) + 1);
  return best;
}

// Small vocabulary with planted homophone pairs (t0~t1 identical, t2~t3 at
// distance 1) for randomized alignment tests.
inline Lexicon planted_lexicon(std::vector<Token>* vocab_out = nullptr) {
  Lexicon lex;
  lex.add("t0", {"K", "AE", "T"});
  lex.add("t1", {"K", "AE", "T"});
  lex.add("t2", {"B", "IY"});
  lex.add("t3", {"B", "AY"});
  lex.add("t4", {"S", "OW", "L", "D"});
  lex.add("t5", {"M"});
  if (vocab_out) *vocab_out = {"t0", "t1", "t2", "t3", "t4", "t5"};
  return lex;
}

inline Sentence random_sentence(RngStream& rng, const std::vector<Token>& vocab,
                                std::size_t max_len) {
  Sentence s;
  std::size_t len = rng.next_index(max_len + 1);
  for (std::size_t i = 0; i < len; ++i) s.push_back(vocab[rng.next_index(vocab.size())]);
  return s;
}

}  // namespace fc2::testing

#endif
