#ifndef FC2_BASELINES_HPP_
#define FC2_BASELINES_HPP_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fc2/align.hpp"
#include "fc2/core.hpp"
#include "fc2/rng.hpp"

namespace fc2 {

// ROVER-style occurrence voting: per column the most frequent token wins
// (Ø included), ties going to the lowest beam index among the tied tokens;
// winning Ø contributes nothing to the output.
inline Sentence rover_vote(const AlignmentGrid& grid) {
  Sentence out;
  const std::size_t n = grid.rows.size();
  for (std::size_t col = 0; col < grid.width(); ++col) {
    std::map<Token, std::size_t> count;
    for (std::size_t r = 0; r < n; ++r) ++count[grid.rows[r][col]];
    std::size_t best_count = 0;
    const Token* winner = nullptr;
    for (std::size_t r = 0; r < n; ++r) {  // beam order resolves ties
      const Token& t = grid.rows[r][col];
      std::size_t c = count[t];
      if (c > best_count) {
        best_count = c;
        winner = &t;
      }
    }
    if (winner && !is_empty_token(*winner)) out.push_back(*winner);
  }
  return out;
}

enum class SelectionKind { CandidatePredictor, WerOracle, FirstBeam, Random };

struct SelectionStrategy {
  SelectionKind kind = SelectionKind::FirstBeam;
  std::uint64_t seed = 0;  // used by Random

  static SelectionStrategy parse(const std::string& name, std::uint64_t seed = 0) {
    if (name == "candidate_predictor") return {SelectionKind::CandidatePredictor, 0};
    if (name == "wer_oracle") return {SelectionKind::WerOracle, 0};
    if (name == "first_beam") return {SelectionKind::FirstBeam, 0};
    if (name == "random") return {SelectionKind::Random, seed};
    throw std::invalid_argument("unknown selection strategy: " + name);
  }
};

// Strategy dispatch. `predicted_losses` backs the candidate-predictor
// strategy (one value per candidate, from the trained model); the WER
// oracle is the idealized ceiling that picks the candidate closest to the
// reference.
inline std::size_t select_candidate(const BeamSet& beams, const SelectionStrategy& strategy,
                                    const std::vector<double>* predicted_losses = nullptr) {
  if (beams.candidates.empty())
    throw std::invalid_argument("select_candidate: empty beam set");
  switch (strategy.kind) {
    case SelectionKind::FirstBeam:
      return 0;
    case SelectionKind::Random: {
      RngStream rng = RngStream::keyed(strategy.seed, beams.utterance_id);
      return rng.next_index(beams.candidates.size());
    }
    case SelectionKind::WerOracle: {
      if (!beams.reference)
        throw std::invalid_argument("strategy wer_oracle requires a reference");
      std::size_t best = 0;
      std::size_t best_edits = levenshtein(beams.candidates[0], *beams.reference);
      for (std::size_t i = 1; i < beams.candidates.size(); ++i) {
        std::size_t e = levenshtein(beams.candidates[i], *beams.reference);
        if (e < best_edits) {
          best_edits = e;
          best = i;
        }
      }
      return best;
    }
    case SelectionKind::CandidatePredictor: {
      if (!predicted_losses || predicted_losses->size() != beams.candidates.size())
        throw std::invalid_argument(
            "strategy candidate_predictor requires predicted losses from a model");
      std::size_t best = 0;
      for (std::size_t i = 1; i < predicted_losses->size(); ++i)
        if ((*predicted_losses)[i] < (*predicted_losses)[best]) best = i;
      return best;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace fc2

#endif  // FC2_BASELINES_HPP_
