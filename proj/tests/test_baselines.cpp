#include <catch2/catch_amalgamated.hpp>

#include "fc2/baselines.hpp"
#include "helpers.hpp"

using namespace fc2;
using fc2::testing::sent;

namespace {
const Lexicon& lex() {
  static Lexicon l = fc2::testing::shipped_lexicon();
  return l;
}
}  // namespace

TEST_CASE("rover majority per column") {
  AlignmentGrid grid;
  grid.rows = {{"A"}, {"A"}, {"B"}};
  CHECK(rover_vote(grid) == sent("A"));
}

TEST_CASE("rover on the introduction example: tie goes to beam 0") {
  BeamSet beams{"u", {sent("I have cat"), sent("I have hat"), sent("I have bat")},
                std::nullopt};
  AlignmentGrid grid = align_candidates(beams, lex());
  CHECK(rover_vote(grid) == sent("I have cat"));
}

TEST_CASE("winning empty token drops the column") {
  AlignmentGrid grid;
  grid.rows = {{"a", ""}, {"a", ""}, {"a", "C"}};
  CHECK(rover_vote(grid) == sent("a"));
}

TEST_CASE("identical rows vote to themselves, empty tokens stripped") {
  AlignmentGrid grid;
  grid.rows = {{"x", "", "y"}, {"x", "", "y"}};
  CHECK(rover_vote(grid) == sent("x y"));
  CHECK(rover_vote(grid).size() <= grid.width());
}

TEST_CASE("select_candidate strategies") {
  BeamSet beams{"utt-7", {sent("a x"), sent("a y"), sent("a b"), sent("z z")}, sent("a b")};

  CHECK(select_candidate(beams, {SelectionKind::FirstBeam, 0}) == 0);
  CHECK(select_candidate(beams, {SelectionKind::WerOracle, 0}) == 2);

  std::size_t r1 = select_candidate(beams, {SelectionKind::Random, 13});
  std::size_t r2 = select_candidate(beams, {SelectionKind::Random, 13});
  CHECK(r1 == r2);  // seeded draw is reproducible

  std::vector<double> losses = {0.9, 0.4, 0.7, 0.5};
  CHECK(select_candidate(beams, {SelectionKind::CandidatePredictor, 0}, &losses) == 1);
}

TEST_CASE("missing prerequisites raise errors naming the need") {
  BeamSet no_ref{"u", {sent("a")}, std::nullopt};
  CHECK_THROWS_AS(select_candidate(no_ref, {SelectionKind::WerOracle, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(select_candidate(no_ref, {SelectionKind::CandidatePredictor, 0}),
                  std::invalid_argument);
}

TEST_CASE("wer oracle never picks a strictly worse candidate") {
  std::vector<Token> vocab;
  Lexicon planted = fc2::testing::planted_lexicon(&vocab);
  RngStream rng(21);
  for (int i = 0; i < 100; ++i) {
    BeamSet beams;
    beams.utterance_id = "w" + std::to_string(i);
    for (int c = 0; c < 4; ++c)
      beams.candidates.push_back(fc2::testing::random_sentence(rng, vocab, 6));
    beams.reference = fc2::testing::random_sentence(rng, vocab, 6);
    std::size_t pick = select_candidate(beams, {SelectionKind::WerOracle, 0});
    std::size_t picked = levenshtein(beams.candidates[pick], *beams.reference);
    for (const auto& c : beams.candidates)
      CHECK(picked <= levenshtein(c, *beams.reference));
  }
}

TEST_CASE("strategy parsing") {
  CHECK(SelectionStrategy::parse("first_beam").kind == SelectionKind::FirstBeam);
  CHECK(SelectionStrategy::parse("wer_oracle").kind == SelectionKind::WerOracle);
  CHECK(SelectionStrategy::parse("random", 5).seed == 5);
  CHECK_THROWS_AS(SelectionStrategy::parse("nope"), std::invalid_argument);
}
