#include <catch2/catch_amalgamated.hpp>

#include "fc2/align.hpp"
#include "fc2/duration.hpp"
#include "helpers.hpp"

using namespace fc2;
using fc2::testing::sent;

namespace {
const Lexicon& lex() {
  static Lexicon l = fc2::testing::shipped_lexicon();
  return l;
}
}  // namespace

TEST_CASE("insertion goes to the pronunciation-closer kept neighbor") {
  // target inserts C between B and D; C is equidistant from both under the
  // shipped lexicon, so the left neighbor wins the tie
  REQUIRE(pron_similarity("C", "B", lex()) == pron_similarity("C", "D", lex()));
  DurationLabels d = extract_durations({"B", "B", "D", "F"}, sent("B B C D F"), lex());
  CHECK(d.durations == std::vector<int>{1, 2, 1, 1});
  CHECK(d.sum() == 5);
}

TEST_CASE("empty-token positions get duration 0") {
  DurationLabels d = extract_durations({"A", "", "B"}, sent("A B"), lex());
  CHECK(d.durations == std::vector<int>{1, 0, 1});
}

TEST_CASE("identity alignment gives all ones") {
  DurationLabels d = extract_durations({"I", "have", "cat"}, sent("I have cat"), lex());
  CHECK(d.durations == std::vector<int>{1, 1, 1});
}

TEST_CASE("pronunciation decides the insertion side when not tied") {
  // row "I cat", target "I hat cat": inserted "hat" is closer to "cat"
  // (distance 1) than to "I", so the right neighbor absorbs it
  DurationLabels d = extract_durations({"I", "cat"}, sent("I hat cat"), lex());
  CHECK(d.durations == std::vector<int>{1, 2});
}

TEST_CASE("leading insertion is absorbed at the boundary") {
  DurationLabels d = extract_durations({"cat"}, sent("the cat"), lex());
  CHECK(d.durations == std::vector<int>{2});
}

TEST_CASE("empty candidate against non-empty target is unalignable") {
  CHECK_THROWS_AS(extract_durations({"", ""}, sent("a b"), lex()), UnalignableError);
}

TEST_CASE("adjust_source repeats, drops and eliminates the empty token") {
  CHECK(adjust_source({"A", "B", "C"}, DurationLabels{{1, 0, 2}}) == sent("A C C"));
  CHECK(adjust_source({"A", "B"}, DurationLabels{{1, 1}}) == sent("A B"));
  CHECK(adjust_source({"A", "", "B"}, DurationLabels{{1, 0, 1}}) == sent("A B"));
  CHECK_THROWS_AS(adjust_source({"A"}, DurationLabels{{-1}}), std::invalid_argument);
}

TEST_CASE("rows of one grid can receive different duration labels") {
  // second candidate misses a token, so its neighbor's duration grows
  BeamSet beams{"u", {sent("B B C D F"), sent("B B D F")}, std::nullopt};
  AlignmentGrid grid = align_candidates(beams, lex());
  Sentence target = sent("B B C D F");
  DurationLabels d0 = extract_durations(grid.rows[0], target, lex());
  DurationLabels d1 = extract_durations(grid.rows[1], target, lex());
  CHECK(d0.durations != d1.durations);
  CHECK(d0.sum() == static_cast<int>(target.size()));
  CHECK(d1.sum() == static_cast<int>(target.size()));
}

TEST_CASE("duration contract holds on fuzzed pairs") {
  std::vector<Token> vocab;
  Lexicon planted = fc2::testing::planted_lexicon(&vocab);
  RngStream rng(555);
  for (int i = 0; i < 1000; ++i) {
    Sentence cand = fc2::testing::random_sentence(rng, vocab, 8);
    Sentence target = fc2::testing::random_sentence(rng, vocab, 8);
    if (target.empty()) target.push_back(vocab[0]);
    // mimic a grid row with random Ø columns mixed in
    std::vector<Token> row;
    for (const auto& t : cand) {
      if (rng.next_double() < 0.25) row.push_back(kEmptyToken);
      row.push_back(t);
    }
    if (cand.empty()) continue;
    DurationLabels d = extract_durations(row, target, planted);
    CHECK(d.sum() == static_cast<int>(target.size()));
    for (std::size_t p = 0; p < row.size(); ++p)
      if (row[p].empty()) CHECK(d.durations[p] == 0);
    CHECK(adjust_source(row, d).size() == target.size());
  }
}
