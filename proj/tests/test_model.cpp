#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "fc2/model/checkpoint.hpp"
#include "fc2/model/infer.hpp"
#include "fc2/model/network.hpp"
#include "fc2/model/train.hpp"
#include "helpers.hpp"

using namespace fc2;
using fc2::testing::sent;

namespace {

const Lexicon& lex() {
  static Lexicon l = fc2::testing::shipped_lexicon();
  return l;
}

Vocab tiny_vocab() {
  return Vocab::build({sent("A B C D E F b the cat hat bat man can ran")});
}

ModelConfig tiny_config(int beam_n = 2) {
  ModelConfig cfg;
  cfg.hidden = 8;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.attention_heads = 2;
  cfg.feed_forward = 16;
  cfg.beam_n = beam_n;
  cfg.dur_conv_layers = 2;
  cfg.max_len = 32;
  cfg.seed = 3;
  return cfg;
}

AlignmentGrid grid_of(const std::vector<Sentence>& cands) {
  BeamSet beams{"g", cands, std::nullopt};
  return align_candidates(beams, lex());
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig cfg = tiny_config();
  cfg.hidden = 9;  // not divisible by 2 heads
  Vocab v = tiny_vocab();
  CHECK_THROWS_AS(CorrectionModel(cfg, v), std::invalid_argument);
  cfg = tiny_config();
  cfg.beam_n = 0;
  CHECK_THROWS_AS(CorrectionModel(cfg, v), std::invalid_argument);
}

TEST_CASE("parameter count is a pure function of the config") {
  Vocab v = tiny_vocab();
  CorrectionModel m1(tiny_config(), v);
  CorrectionModel m2(tiny_config(), v);
  CHECK(m1.parameter_count() == m2.parameter_count());
  CHECK(m1.parameter_count() > 0);
}

TEST_CASE("prenet_encode shape contract and row-count error") {
  Vocab v = tiny_vocab();
  CorrectionModel model(tiny_config(4), v);
  GraphContext ctx(model, false);
  AlignmentGrid grid = grid_of({sent("A B C D E F b"), sent("A B C D E F b"),
                                sent("A B C D E F b"), sent("A B C D E F b")});
  EncodeResult enc = prenet_encode(ctx, grid);
  CHECK(enc.encoder_out->value.rows() == 7);
  CHECK(enc.encoder_out->value.cols() == model.config().hidden);

  AlignmentGrid bad = grid_of({sent("A B")});
  CHECK_THROWS_AS(prenet_encode(ctx, bad), std::invalid_argument);
}

TEST_CASE("all-equal candidate rows make the encoder invariant to row order") {
  Vocab v = tiny_vocab();
  CorrectionModel model(tiny_config(3), v);
  GraphContext ctx(model, false);
  AlignmentGrid grid = grid_of({sent("A B C"), sent("A B C"), sent("A B C")});
  EncodeResult a = prenet_encode(ctx, grid);
  std::swap(grid.rows[0], grid.rows[2]);
  GraphContext ctx2(model, false);
  EncodeResult b = prenet_encode(ctx2, grid);
  CHECK((a.encoder_out->value - b.encoder_out->value).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("predictors: shapes, determinism, equal rows give equal losses") {
  Vocab v = tiny_vocab();
  CorrectionModel model(tiny_config(2), v);
  AlignmentGrid grid = grid_of({sent("A B C"), sent("A B C")});

  GraphContext ctx(model, false);
  EncodeResult enc = prenet_encode(ctx, grid);
  auto durs = predict_durations(ctx, enc);
  REQUIRE(durs.size() == 2);
  for (const auto& d : durs) {
    CHECK(d->value.rows() == 3);
    CHECK(d->value.cols() == 1);
  }
  auto cands = predict_candidate_losses(ctx, enc);
  REQUIRE(cands.size() == 2);
  CHECK(cands[0]->value(0, 0) == Catch::Approx(cands[1]->value(0, 0)));

  // evaluation-mode double forward is bit-identical
  GraphContext ctx2(model, false);
  EncodeResult enc2 = prenet_encode(ctx2, grid);
  auto durs2 = predict_durations(ctx2, enc2);
  CHECK(durs[0]->value == durs2[0]->value);
}

TEST_CASE("different tokens at a position can get different duration predictions") {
  Vocab v = tiny_vocab();
  CorrectionModel model(tiny_config(2), v);
  AlignmentGrid grid = grid_of({sent("A B C"), sent("A D C")});
  GraphContext ctx(model, false);
  EncodeResult enc = prenet_encode(ctx, grid);
  auto durs = predict_durations(ctx, enc);
  CHECK((durs[0]->value - durs[1]->value).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("decode_parallel: shape, determinism, position sensitivity, empty input") {
  Vocab v = tiny_vocab();
  CorrectionModel model(tiny_config(2), v);
  AlignmentGrid grid = grid_of({sent("A B C"), sent("A B C")});
  GraphContext ctx(model, false);
  EncodeResult enc = prenet_encode(ctx, grid);

  auto ids = v.ids(sent("A B C"));
  auto logits = decode_parallel(ctx, ids, enc.encoder_out);
  CHECK(logits->value.rows() == 3);
  CHECK(logits->value.cols() == v.size());

  auto logits2 = decode_parallel(ctx, ids, enc.encoder_out);
  CHECK(logits->value == logits2->value);

  auto shuffled = v.ids(sent("C B A"));
  auto logits3 = decode_parallel(ctx, shuffled, enc.encoder_out);
  CHECK((logits->value - logits3->value).cwiseAbs().maxCoeff() > 0.0);

  CHECK_THROWS_AS(decode_parallel(ctx, {}, enc.encoder_out), std::invalid_argument);
}

TEST_CASE("training_step: lambdas zero reduces total to decoder CE") {
  Vocab v = tiny_vocab();
  CorrectionModel model(tiny_config(2), v);
  BeamSet beams{"t", {sent("A B C"), sent("A C")}, sent("A B C")};
  auto ex = make_training_example(beams, lex(), 2, AlignMode::Scored);
  REQUIRE(ex.has_value());
  GraphContext ctx(model, true);
  StepLosses l;
  auto total = example_loss(ctx, *ex, 0.0, 0.0, &l);
  CHECK(total->value(0, 0) == Catch::Approx(l.decoder_ce));
}

TEST_CASE("candidate predictor labels equal the recomputed decoder CE") {
  Vocab v = tiny_vocab();
  CorrectionModel model(tiny_config(2), v);
  BeamSet beams{"t", {sent("A B C"), sent("A C")}, sent("A B C")};
  auto ex = make_training_example(beams, lex(), 2, AlignMode::Scored);
  REQUIRE(ex.has_value());
  {
    GraphContext ctx(model, true);
    example_loss(ctx, *ex, 1.0, 1.0);
  }
  // recompute the per-row CE independently in eval mode
  GraphContext ctx(model, false);
  EncodeResult enc = prenet_encode(ctx, ex->grid);
  auto target_ids = v.ids(ex->target);
  for (std::size_t r = 0; r < ex->grid.rows.size(); ++r) {
    Sentence adjusted = adjust_source(ex->grid.rows[r], ex->durations[r]);
    auto ce = ag::cross_entropy_mean(decode_parallel(ctx, v.ids(adjusted), enc.encoder_out),
                                     target_ids);
    CHECK(ex->decoder_ce[r] == Catch::Approx(ce->value(0, 0)));
  }
}

TEST_CASE("mismatched durations are rejected before the forward pass") {
  Vocab v = tiny_vocab();
  CorrectionModel model(tiny_config(2), v);
  BeamSet beams{"t", {sent("A B C"), sent("A C")}, sent("A B C")};
  auto ex = make_training_example(beams, lex(), 2, AlignMode::Scored);
  REQUIRE(ex.has_value());
  ex->durations[0].durations.back() += 1;
  GraphContext ctx(model, true);
  CHECK_THROWS_AS(example_loss(ctx, *ex, 1, 1), std::invalid_argument);
}

TEST_CASE("gradient check at tiny scale") {
  Vocab v = tiny_vocab();
  ModelConfig cfg = tiny_config(2);
  CorrectionModel model(cfg, v);
  BeamSet beams{"gc", {sent("A B C D"), sent("A hat C")}, sent("A B C D")};
  auto ex = make_training_example(beams, lex(), 2, AlignMode::Scored);
  REQUIRE(ex.has_value());
  double err = gradient_check(model, *ex, 250);
  CHECK(err <= 1e-4);
}

TEST_CASE("loss stays finite across random seeds") {
  Vocab v = tiny_vocab();
  RngStream rng(2024);
  std::vector<Token> vocab_toks = {"A", "B", "C", "cat", "hat", "man"};
  for (int s = 0; s < 30; ++s) {
    ModelConfig cfg = tiny_config(2);
    cfg.seed = 1000 + s;
    CorrectionModel model(cfg, v);
    Sentence ref = fc2::testing::random_sentence(rng, vocab_toks, 6);
    if (ref.empty()) ref.push_back("A");
    Sentence c1 = fc2::testing::random_sentence(rng, vocab_toks, 6);
    if (c1.empty()) c1.push_back("B");
    BeamSet beams{"f" + std::to_string(s), {ref, c1}, ref};
    auto ex = make_training_example(beams, lex(), 2, AlignMode::Scored);
    if (!ex) continue;
    GraphContext ctx(model, true);
    StepLosses l;
    example_loss(ctx, *ex, 1, 1, &l);
    CHECK(std::isfinite(l.decoder_ce));
    CHECK(std::isfinite(l.duration_mse));
    CHECK(std::isfinite(l.candidate_mse));
  }
}

TEST_CASE("overfit on a tiny set halves the decoder CE") {
  Vocab v = tiny_vocab();
  ModelConfig cfg = tiny_config(2);
  cfg.hidden = 16;
  cfg.feed_forward = 32;
  CorrectionModel model(cfg, v);

  std::vector<Sentence> refs = {sent("A B C"), sent("the cat ran"), sent("B b D"),
                                sent("man can ran"), sent("A hat"), sent("C D E F")};
  std::vector<TrainingExample> examples;
  RngStream rng(8);
  std::vector<Token> vocab_toks = {"A", "B", "C", "D", "cat", "hat"};
  for (int i = 0; i < 16; ++i) {
    Sentence ref = refs[i % refs.size()];
    Sentence noisy = ref;
    noisy[rng.next_index(noisy.size())] = vocab_toks[rng.next_index(vocab_toks.size())];
    BeamSet beams{"o" + std::to_string(i), {noisy, ref}, ref};
    auto ex = make_training_example(beams, lex(), 2, AlignMode::Scored);
    REQUIRE(ex.has_value());
    examples.push_back(std::move(*ex));
  }

  TrainOptions opts;
  opts.epochs = 50;  // 16 examples, batch 4 -> 200 steps
  opts.batch_size = 4;
  opts.learning_rate = 2e-3;
  double first_ce = -1, last_ce = -1;
  opts.log = [&](int step, const StepLosses& l) {
    if (step == 1) first_ce = l.decoder_ce;
    last_ce = l.decoder_ce;
  };
  Trainer trainer(model, opts);
  trainer.fit(examples);
  REQUIRE(first_ce > 0);
  CHECK(last_ce <= 0.5 * first_ce);
}

TEST_CASE("checkpoint round-trip preserves outputs") {
  Vocab v = tiny_vocab();
  CorrectionModel model(tiny_config(2), v);
  std::stringstream buf;
  save_checkpoint(buf, model);
  auto loaded = load_checkpoint(buf);

  AlignmentGrid grid = grid_of({sent("A B C"), sent("A C")});
  GraphContext c1(model, false), c2(*loaded, false);
  EncodeResult e1 = prenet_encode(c1, grid), e2 = prenet_encode(c2, grid);
  CHECK(e1.encoder_out->value == e2.encoder_out->value);
  CHECK(loaded->config().beam_n == 2);
}

TEST_CASE("corrupt checkpoint is rejected") {
  std::stringstream buf("garbage data");
  CHECK_THROWS_AS(load_checkpoint(buf), std::runtime_error);
}

TEST_CASE("duration clamping rules") {
  std::vector<Token> row = {"a", "b", "c"};
  CHECK(clamp_durations(row, {0.6, 1.4, 0.2}).durations == std::vector<int>{1, 1, 0});
  // all-zero rounding forces 1 at the largest raw prediction
  CHECK(clamp_durations(row, {0.1, 0.2, 0.4}).durations == std::vector<int>{0, 0, 1});
  // Ø positions pinned to zero even with positive raw predictions
  std::vector<Token> with_gap = {"a", "", "c"};
  auto d = clamp_durations(with_gap, {1.2, 2.0, 0.9});
  CHECK(d.durations == std::vector<int>{1, 0, 1});
}

TEST_CASE("infer is deterministic and errors on empty beams") {
  Vocab v = tiny_vocab();
  CorrectionModel model(tiny_config(2), v);
  BeamSet beams{"i", {sent("A B C"), sent("A C")}, std::nullopt};
  InferResult a = infer(model, beams, lex());
  InferResult b = infer(model, beams, lex());
  CHECK(a.corrected == b.corrected);
  CHECK(a.selected_candidate == b.selected_candidate);
  CHECK(a.predicted_losses.size() == 2);

  BeamSet empty{"e", {}, std::nullopt};
  CHECK_THROWS_AS(infer(model, empty, lex()), std::invalid_argument);
}

TEST_CASE("an overfit model reproduces a memorized sentence at inference") {
  Vocab v = tiny_vocab();
  ModelConfig cfg = tiny_config(2);
  cfg.hidden = 16;
  cfg.feed_forward = 32;
  CorrectionModel model(cfg, v);

  Sentence ref = sent("the cat ran");
  std::vector<TrainingExample> examples;
  for (int i = 0; i < 8; ++i) {
    BeamSet beams{"m" + std::to_string(i), {ref, ref}, ref};
    examples.push_back(*make_training_example(beams, lex(), 2, AlignMode::Scored));
  }
  TrainOptions opts;
  opts.epochs = 40;
  opts.batch_size = 4;
  opts.learning_rate = 2e-3;
  Trainer(model, opts).fit(examples);

  BeamSet beams{"q", {ref, ref}, std::nullopt};
  InferResult res = infer(model, beams, lex());
  CHECK(res.corrected == ref);
}
