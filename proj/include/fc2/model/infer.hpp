#ifndef FC2_MODEL_INFER_HPP_
#define FC2_MODEL_INFER_HPP_

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fc2/align.hpp"
#include "fc2/baselines.hpp"
#include "fc2/duration.hpp"
#include "fc2/model/network.hpp"
#include "fc2/model/train.hpp"
#include "fc2/phonetics.hpp"

namespace fc2 {

// Predicted per-candidate decoder losses for strategy dispatch.
inline std::vector<double> predicted_candidate_losses(CorrectionModel& model,
                                                      const BeamSet& beams,
                                                      const Lexicon& lex,
                                                      AlignMode mode = AlignMode::Scored) {
  BeamSet fitted = fit_beam(beams, model.config().beam_n);
  AlignmentGrid grid = build_grid(fitted, lex, mode);
  GraphContext ctx(model, /*train=*/false);
  EncodeResult enc = prenet_encode(ctx, grid);
  std::vector<double> out;
  for (const auto& node : predict_candidate_losses(ctx, enc))
    out.push_back(node->value(0, 0));
  return out;
}

// Round raw duration predictions to nonnegative integers; Ø positions are
// pinned to 0 and an all-zero result forces duration 1 at the non-Ø
// position with the largest raw prediction.
inline DurationLabels clamp_durations(const std::vector<Token>& row,
                                      const std::vector<double>& raw) {
  DurationLabels labels;
  labels.durations.resize(raw.size(), 0);
  bool any = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (is_empty_token(row[i])) continue;
    int d = static_cast<int>(std::lround(raw[i]));
    labels.durations[i] = std::max(0, d);
    any = any || labels.durations[i] > 0;
  }
  if (!any) {
    std::size_t best = raw.size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (is_empty_token(row[i])) continue;
      if (best == raw.size() || raw[i] > raw[best]) best = i;
    }
    if (best < raw.size()) labels.durations[best] = 1;
  }
  return labels;
}

struct InferResult {
  Sentence corrected;
  std::size_t selected_candidate = 0;
  std::vector<double> predicted_losses;
};

// Full inference path: align, encode, predict durations and candidate
// losses, pick a candidate by strategy (argmin predicted loss by default),
// length-adjust its row and decode in parallel.
inline InferResult infer(CorrectionModel& model, const BeamSet& beams, const Lexicon& lex,
                         SelectionStrategy strategy = {SelectionKind::CandidatePredictor, 0},
                         AlignMode mode = AlignMode::Scored) {
  if (beams.candidates.empty()) throw std::invalid_argument("infer: empty beam set");
  BeamSet fitted = fit_beam(beams, model.config().beam_n);
  AlignmentGrid grid = build_grid(fitted, lex, mode);

  GraphContext ctx(model, /*train=*/false);
  EncodeResult enc = prenet_encode(ctx, grid);

  InferResult res;
  for (const auto& node : predict_candidate_losses(ctx, enc))
    res.predicted_losses.push_back(node->value(0, 0));
  res.selected_candidate = select_candidate(fitted, strategy, &res.predicted_losses);

  const auto& row = grid.rows[res.selected_candidate];
  auto dur_node = predict_durations_row(ctx, enc.encoder_out,
                                        enc.row_embeddings[res.selected_candidate]);
  std::vector<double> raw(dur_node->value.rows());
  for (Eigen::Index i = 0; i < dur_node->value.rows(); ++i) raw[i] = dur_node->value(i, 0);
  DurationLabels labels = clamp_durations(row, raw);

  Sentence adjusted = adjust_source(row, labels);
  if (adjusted.empty()) return res;  // empty candidate row, nothing to decode

  auto logits = decode_parallel(ctx, model.vocab().ids(adjusted), enc.encoder_out);
  for (Eigen::Index i = 0; i < logits->value.rows(); ++i) {
    Eigen::Index best;
    logits->value.row(i).maxCoeff(&best);
    res.corrected.push_back(model.vocab().token(static_cast<int>(best)));
  }
  return res;
}

}  // namespace fc2

#endif  // FC2_MODEL_INFER_HPP_
