#include <catch2/catch_amalgamated.hpp>

#include "fc2/core.hpp"
#include "fc2/rng.hpp"
#include "helpers.hpp"

using namespace fc2;
using fc2::testing::sent;

TEST_CASE("tokenize whitespace mode") {
  CHECK(tokenize("I have cat", TokenizeMode::Whitespace) == Sentence{"I", "have", "cat"});
  CHECK(tokenize("", TokenizeMode::Whitespace).empty());
  CHECK(tokenize("  a \t b\n", TokenizeMode::Whitespace) == Sentence{"a", "b"});
}

TEST_CASE("tokenize character mode") {
  CHECK(tokenize("BBDEF", TokenizeMode::Character) == Sentence{"B", "B", "D", "E", "F"});
  CHECK(tokenize("a b", TokenizeMode::Character) == Sentence{"a", "b"});
  // multi-byte codepoints stay whole
  CHECK(tokenize("aØb", TokenizeMode::Character) == Sentence{"a", "Ø", "b"});
}

TEST_CASE("tokenize round-trips under detokenize in whitespace mode") {
  RngStream rng(11);
  std::vector<Token> vocab = {"a", "bb", "ccc", "dd"};
  for (int i = 0; i < 50; ++i) {
    Sentence s = fc2::testing::random_sentence(rng, vocab, 8);
    CHECK(tokenize(detokenize(s, TokenizeMode::Whitespace), TokenizeMode::Whitespace) == s);
  }
}

TEST_CASE("wer basics") {
  Sentence abc = sent("a b c");
  CHECK(wer(abc, abc).edits == 0);
  CHECK(wer(abc, abc).rate() == 0.0);
  CHECK(wer(sent("a x c"), abc).edits == 1);
  CHECK(wer(sent("a x c"), abc).rate() == Catch::Approx(1.0 / 3.0));
  // frozen from the brute-force oracle
  ErrorRate r = wer(sent("a b"), sent("a b c d"));
  CHECK(r.edits == fc2::testing::brute_edit_distance(sent("a b"), sent("a b c d")));
  CHECK(r.edits == 2);
  CHECK(r.rate() == Catch::Approx(0.5));
}

TEST_CASE("empty reference is an explicit error, not silent zero") {
  ErrorRate r = wer(sent("a b"), {});
  CHECK(r.edits == 2);
  CHECK_FALSE(r.rate_defined());
  CHECK_THROWS_AS(r.rate(), std::domain_error);
  CHECK(wer({}, {}).rate() == 0.0);
}

TEST_CASE("edit distance is symmetric and satisfies the triangle inequality") {
  RngStream rng(42);
  std::vector<Token> vocab = {"u", "v", "w", "x"};
  for (int i = 0; i < 200; ++i) {
    Sentence a = fc2::testing::random_sentence(rng, vocab, 6);
    Sentence b = fc2::testing::random_sentence(rng, vocab, 6);
    Sentence c = fc2::testing::random_sentence(rng, vocab, 6);
    CHECK(levenshtein(a, b) == levenshtein(b, a));
    CHECK(levenshtein(a, b) == fc2::testing::brute_edit_distance(a, b));
    CHECK(levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c));
  }
}

TEST_CASE("corpus WER aggregates edits before dividing") {
  ErrorRate corpus;
  corpus += wer(sent("a x"), sent("a b"));      // 1/2
  corpus += wer(sent("a b c d"), sent("a b c d"));  // 0/4
  CHECK(corpus.edits == 1);
  CHECK(corpus.ref_len == 6);
  CHECK(corpus.rate() == Catch::Approx(1.0 / 6.0));  // not mean(0.5, 0)
}

TEST_CASE("werr") {
  CHECK(werr(0.10, 0.09) == Catch::Approx(0.10));
  CHECK(werr(4.31, 3.84) == Catch::Approx(0.1090).margin(1e-4));
  CHECK(werr(0.2, 0.2) == Catch::Approx(0.0));
  CHECK_THROWS_AS(werr(0.0, 0.1), std::domain_error);
}
