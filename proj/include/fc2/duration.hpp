#ifndef FC2_DURATION_HPP_
#define FC2_DURATION_HPP_

#include <stdexcept>
#include <string>
#include <vector>

#include "fc2/align.hpp"
#include "fc2/core.hpp"
#include "fc2/phonetics.hpp"

namespace fc2 {

// Per-grid-column target-token counts for one candidate row. Sums to the
// target length; Ø columns are always 0.
struct DurationLabels {
  std::vector<int> durations;

  int sum() const {
    int s = 0;
    for (int d : durations) s += d;
    return s;
  }
};

struct UnalignableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Duration of each source position of `row` against `target`: align the
// bare candidate with the target, give every kept source token duration 1,
// deleted tokens 0, and attribute each target-side insertion to the
// neighboring kept source token whose pronunciation is closer to the
// inserted token (left neighbor on ties or at boundaries).
inline DurationLabels extract_durations(const std::vector<Token>& row,
                                        const Sentence& target, const Lexicon& lex) {
  Sentence cand = strip_empty(row);
  if (cand.empty() && !target.empty())
    throw UnalignableError("empty candidate against non-empty target");

  std::vector<int> dur(cand.size(), 0);
  if (!cand.empty()) {
    EditPath path = best_edit_path(cand, target, lex);

    // First pass: source position per op, 1 for kept tokens.
    std::vector<int> src_of_op(path.ops.size(), -1);
    std::size_t src = 0;
    for (std::size_t k = 0; k < path.ops.size(); ++k) {
      const auto& op = path.ops[k];
      if (op.kind == OpKind::Insertion) continue;
      src_of_op[k] = static_cast<int>(src);
      if (op.kind != OpKind::Deletion) dur[src] = 1;
      ++src;
    }

    // Second pass: attribute insertions to the nearest kept neighbors.
    for (std::size_t k = 0; k < path.ops.size(); ++k) {
      if (path.ops[k].kind != OpKind::Insertion) continue;
      const Token& ins_tok = path.ops[k].b_tok;
      int left = -1, right = -1;
      for (std::size_t p = k; p-- > 0;) {
        int s = src_of_op[p];
        if (s >= 0 && dur[s] >= 1) { left = s; break; }
      }
      for (std::size_t p = k + 1; p < path.ops.size(); ++p) {
        int s = src_of_op[p];
        if (s >= 0 && dur[s] >= 1) { right = s; break; }
      }
      if (left < 0 && right < 0)
        throw UnalignableError("no surviving source token to absorb insertion");
      int pick;
      if (left < 0) pick = right;
      else if (right < 0) pick = left;
      else {
        int sl = pron_similarity(ins_tok, cand[left], lex);
        int sr = pron_similarity(ins_tok, cand[right], lex);
        pick = sr > sl ? right : left;
      }
      dur[pick] += 1;
    }
  }

  // Map candidate durations back onto grid columns; Ø stays 0.
  DurationLabels out;
  out.durations.assign(row.size(), 0);
  std::size_t ci = 0;
  for (std::size_t i = 0; i < row.size(); ++i)
    if (!is_empty_token(row[i])) out.durations[i] = dur[ci++];
  return out;
}

// Length regulator: repeat each token durations[i] times; 0 drops it.
inline Sentence adjust_source(const std::vector<Token>& row, const DurationLabels& labels) {
  if (row.size() != labels.durations.size())
    throw std::invalid_argument("adjust_source: length mismatch");
  Sentence out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    int d = labels.durations[i];
    if (d < 0) throw std::invalid_argument("adjust_source: negative duration");
    if (d > 0 && is_empty_token(row[i]))
      throw std::invalid_argument("adjust_source: positive duration on empty token");
    for (int k = 0; k < d; ++k) out.push_back(row[i]);
  }
  return out;
}

}  // namespace fc2

#endif  // FC2_DURATION_HPP_
