#ifndef FC2_MODEL_TRAIN_HPP_
#define FC2_MODEL_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fc2/align.hpp"
#include "fc2/duration.hpp"
#include "fc2/model/network.hpp"
#include "fc2/noising.hpp"
#include "fc2/phonetics.hpp"
#include "fc2/rng.hpp"

namespace fc2 {

struct TrainingExample {
  std::string utterance_id;
  AlignmentGrid grid;                 // beam_n rows
  std::vector<DurationLabels> durations;  // one per row, sums to target length
  Sentence target;
  std::vector<double> decoder_ce;     // per-row CE, filled by the last step
};

enum class AlignMode { Scored, Naive };

// Pads (by repeating the last candidate) or truncates the beam to n entries.
inline BeamSet fit_beam(const BeamSet& beams, std::size_t n) {
  BeamSet out = beams;
  if (out.candidates.empty()) throw std::invalid_argument("fit_beam: empty beam set");
  while (out.candidates.size() < n) out.candidates.push_back(out.candidates.back());
  if (out.candidates.size() > n) out.candidates.resize(n);
  return out;
}

inline AlignmentGrid build_grid(const BeamSet& beams, const Lexicon& lex, AlignMode mode) {
  return mode == AlignMode::Scored ? align_candidates(beams, lex) : naive_pad_align(beams);
}

// Grid + gold durations for one utterance; nullopt when any row cannot be
// aligned against the target (e.g. an empty candidate).
inline std::optional<TrainingExample> make_training_example(const BeamSet& beams,
                                                            const Lexicon& lex,
                                                            std::size_t beam_n,
                                                            AlignMode mode) {
  if (!beams.reference || beams.reference->empty()) return std::nullopt;
  BeamSet fitted = fit_beam(beams, beam_n);
  TrainingExample ex;
  ex.utterance_id = fitted.utterance_id;
  ex.grid = build_grid(fitted, lex, mode);
  if (ex.grid.width() == 0) return std::nullopt;
  ex.target = *fitted.reference;
  try {
    for (const auto& row : ex.grid.rows)
      ex.durations.push_back(extract_durations(row, ex.target, lex));
  } catch (const UnalignableError&) {
    return std::nullopt;
  }
  return ex;
}

struct StepLosses {
  double decoder_ce = 0.0;
  double duration_mse = 0.0;
  double candidate_mse = 0.0;

  double total(double lambda_dur, double lambda_cand) const {
    return decoder_ce + lambda_dur * duration_mse + lambda_cand * candidate_mse;
  }
};

// Builds the full training graph for one example and returns the combined
// scalar loss node: mean decoder CE over all candidate rows, duration MSE
// against gold labels, candidate MSE against the detached per-row CE.
// `fixed_candidate_labels`, when given, replaces the freshly computed
// per-row CE as the candidate-predictor regression target (used by the
// finite-difference check, where the detached label must stay constant).
inline ag::NodePtr example_loss(GraphContext& ctx, TrainingExample& ex,
                                double lambda_dur, double lambda_cand,
                                StepLosses* losses = nullptr,
                                const std::vector<double>* fixed_candidate_labels = nullptr) {
  const auto& cfg = ctx.model().config();
  const auto& vocab = ctx.model().vocab();
  const std::size_t n = ex.grid.rows.size();
  if (static_cast<int>(n) != cfg.beam_n)
    throw std::invalid_argument("example_loss: grid rows != beam_n");
  for (const auto& d : ex.durations)
    if (d.sum() != static_cast<int>(ex.target.size()))
      throw std::invalid_argument("example_loss: durations do not sum to target length");

  EncodeResult enc = prenet_encode(ctx, ex.grid);
  std::vector<int> target_ids = vocab.ids(ex.target);

  ag::NodePtr ce_sum, dur_sum, cand_sum;
  ex.decoder_ce.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    Sentence adjusted = adjust_source(ex.grid.rows[r], ex.durations[r]);
    auto logits = decode_parallel(ctx, vocab.ids(adjusted), enc.encoder_out);
    auto ce = ag::cross_entropy_mean(logits, target_ids);
    ex.decoder_ce[r] = ce->value(0, 0);
    ce_sum = ce_sum ? ag::add(ce_sum, ce) : ce;

    auto dur_pred = predict_durations_row(ctx, enc.encoder_out, enc.row_embeddings[r]);
    ag::Mat gold(dur_pred->value.rows(), 1);
    for (Eigen::Index i = 0; i < gold.rows(); ++i) gold(i, 0) = ex.durations[r].durations[i];
    auto dmse = ag::mse_const(dur_pred, gold);
    dur_sum = dur_sum ? ag::add(dur_sum, dmse) : dmse;

    auto cand_pred = predict_candidate_loss_row(ctx, enc.encoder_out, enc.row_embeddings[r]);
    ag::Mat label(1, 1);
    label(0, 0) = fixed_candidate_labels ? (*fixed_candidate_labels)[r]
                                         : ex.decoder_ce[r];  // detached
    auto cmse = ag::mse_const(cand_pred, label);
    cand_sum = cand_sum ? ag::add(cand_sum, cmse) : cmse;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  auto ce_mean = ag::scale(ce_sum, inv_n);
  auto dur_mean = ag::scale(dur_sum, inv_n);
  auto cand_mean = ag::scale(cand_sum, inv_n);
  if (losses) {
    losses->decoder_ce = ce_mean->value(0, 0);
    losses->duration_mse = dur_mean->value(0, 0);
    losses->candidate_mse = cand_mean->value(0, 0);
  }
  auto total = ce_mean;
  if (lambda_dur != 0.0) total = ag::add(total, ag::scale(dur_mean, lambda_dur));
  if (lambda_cand != 0.0) total = ag::add(total, ag::scale(cand_mean, lambda_cand));
  return total;
}

struct TrainOptions {
  int epochs = 5;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 1.0;  // global norm; <= 0 disables
  double lambda_dur = 1.0;
  double lambda_cand = 1.0;
  std::uint64_t shuffle_seed = 7;
  std::function<void(int step, const StepLosses&)> log;
};

class Trainer {
 public:
  Trainer(CorrectionModel& model, TrainOptions opts)
      : model_(model), opts_(std::move(opts)), dropout_rng_(model.config().seed ^ 0x5eedull) {}

  // One optimizer step over a batch; returns batch-mean losses.
  StepLosses step(std::vector<TrainingExample*> batch) {
    if (batch.empty()) throw std::invalid_argument("Trainer::step: empty batch");
    model_.zero_grads();
    StepLosses mean;
    for (TrainingExample* ex : batch) {
      GraphContext ctx(model_, /*train=*/true, &dropout_rng_);
      StepLosses l;
      auto loss = example_loss(ctx, *ex, opts_.lambda_dur, opts_.lambda_cand, &l);
      ag::backward(loss);
      mean.decoder_ce += l.decoder_ce;
      mean.duration_mse += l.duration_mse;
      mean.candidate_mse += l.candidate_mse;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    mean.decoder_ce *= inv;
    mean.duration_mse *= inv;
    mean.candidate_mse *= inv;
    for (auto& p : model_.params()) p->grad *= inv;
    adam_step();
    return mean;
  }

  // Full training loop with per-epoch shuffling.
  void fit(std::vector<TrainingExample>& examples) {
    if (examples.empty()) throw std::invalid_argument("Trainer::fit: no examples");
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    int step_no = 0;
    for (int epoch = 0; epoch < opts_.epochs; ++epoch) {
      RngStream shuffle(opts_.shuffle_seed + static_cast<std::uint64_t>(epoch));
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[shuffle.next_index(i)]);
      for (std::size_t start = 0; start < order.size(); start += opts_.batch_size) {
        std::vector<TrainingExample*> batch;
        for (std::size_t k = start; k < std::min(order.size(), start + opts_.batch_size); ++k)
          batch.push_back(&examples[order[k]]);
        StepLosses l = step(std::move(batch));
        ++step_no;
        if (opts_.log) opts_.log(step_no, l);
      }
    }
  }

  int steps_taken() const { return adam_t_; }

 private:
  void adam_step() {
    if (opts_.grad_clip > 0) {
      double sq = 0;
      for (auto& p : model_.params()) sq += p->grad.squaredNorm();
      double norm = std::sqrt(sq);
      if (norm > opts_.grad_clip) {
        double s = opts_.grad_clip / norm;
        for (auto& p : model_.params()) p->grad *= s;
      }
    }
    ++adam_t_;
    const double b1 = opts_.adam_beta1, b2 = opts_.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, adam_t_);
    const double bc2 = 1.0 - std::pow(b2, adam_t_);
    for (auto& p : model_.params()) {
      if (p->adam_m.size() == 0) {
        p->adam_m = ag::Mat::Zero(p->value.rows(), p->value.cols());
        p->adam_v = ag::Mat::Zero(p->value.rows(), p->value.cols());
      }
      p->adam_m = b1 * p->adam_m + (1.0 - b1) * p->grad;
      p->adam_v = b2 * p->adam_v + (1.0 - b2) * p->grad.cwiseProduct(p->grad);
      ag::Mat mhat = p->adam_m / bc1;
      ag::Mat vhat = p->adam_v / bc2;
      p->value -= opts_.learning_rate *
                  mhat.cwiseQuotient((vhat.cwiseSqrt().array() + opts_.adam_eps).matrix());
    }
  }

  CorrectionModel& model_;
  TrainOptions opts_;
  RngStream dropout_rng_;
  int adam_t_ = 0;
};

// Central finite-difference check of the analytic gradient of the total
// loss, over up to `samples` parameter coordinates spread across all
// tensors. Returns the maximum relative error. Dropout must be disabled.
inline double gradient_check(CorrectionModel& model, TrainingExample& example,
                             std::size_t samples = 256, double h = 1e-5,
                             double lambda_dur = 1.0, double lambda_cand = 1.0) {
  if (model.config().dropout != 0.0)
    throw std::invalid_argument("gradient_check requires dropout == 0");
  model.zero_grads();
  {
    GraphContext ctx(model, /*train=*/true, nullptr);
    auto loss = example_loss(ctx, example, lambda_dur, lambda_cand);
    ag::backward(loss);
  }
  // The candidate labels are detached in the analytic graph, so the numeric
  // probe must hold them at their base-point values.
  const std::vector<double> base_labels = example.decoder_ce;
  auto eval_loss = [&]() {
    GraphContext ctx(model, /*train=*/false, nullptr);
    StepLosses l;
    example_loss(ctx, example, lambda_dur, lambda_cand, &l, &base_labels);
    return l.total(lambda_dur, lambda_cand);
  };

  std::size_t total = model.parameter_count();
  RngStream rng(model.config().seed ^ 0x67726164ull);
  double max_rel = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    std::size_t flat = rng.next_index(total);
    Parameter* target = nullptr;
    for (auto& p : model.params()) {
      std::size_t sz = static_cast<std::size_t>(p->value.size());
      if (flat < sz) { target = p.get(); break; }
      flat -= sz;
    }
    double* coeff = target->value.data() + flat;
    double orig = *coeff;
    *coeff = orig + h;
    double lp = eval_loss();
    *coeff = orig - h;
    double lm = eval_loss();
    *coeff = orig;
    double numeric = (lp - lm) / (2 * h);
    double analytic = target->grad.data()[flat];
    double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
    max_rel = std::max(max_rel, std::abs(numeric - analytic) / denom);
  }
  return max_rel;
}

}  // namespace fc2

#endif  // FC2_MODEL_TRAIN_HPP_
