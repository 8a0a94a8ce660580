// fc2: candidate alignment, noising, duration extraction, training,
// correction and scoring over line-delimited JSON corpora. Every subcommand
// is deterministic given its flags and inputs; outputs start with a header
// record carrying the tool name, config hash and seed.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fc2/baselines.hpp"
#include "fc2/model/checkpoint.hpp"
#include "fc2/model/infer.hpp"
#include "fc2/model/train.hpp"
#include "fc2/noising.hpp"
#include "fc2/records.hpp"

namespace {

using namespace fc2;

TokenizeMode parse_mode(const std::string& s) {
  if (s == "whitespace") return TokenizeMode::Whitespace;
  if (s == "character") return TokenizeMode::Character;
  throw std::invalid_argument("unknown tokenize mode: " + s);
}

AlignMode parse_align_mode(const std::string& s) {
  if (s == "scored") return AlignMode::Scored;
  if (s == "naive") return AlignMode::Naive;
  throw std::invalid_argument("unknown align mode: " + s);
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon: " + path);
  std::vector<std::string> warnings;
  Lexicon lex = Lexicon::load(in, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  return lex;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output: " + path);
  return out;
}

template <typename Rec>
void sort_by_id(std::vector<Rec>& recs) {
  std::stable_sort(recs.begin(), recs.end(), [](const Rec& a, const Rec& b) {
    return a.utterance_id < b.utterance_id;
  });
}

// --- align -----------------------------------------------------------------

int cmd_align(const std::string& in_path, const std::string& out_path,
              const std::string& lexicon_path, const std::string& mode,
              const std::string& tokenize_mode) {
  Lexicon lex = load_lexicon(lexicon_path);
  AlignMode amode = parse_align_mode(mode);
  auto in = open_in(in_path);
  auto beams = read_beam_records(in, parse_mode(tokenize_mode));
  sort_by_id(beams);

  std::vector<GridRecord> grids;
  grids.reserve(beams.size());
  for (const auto& b : beams)
    grids.push_back({b.utterance_id, build_grid(b, lex, amode)});

  auto out = open_out(out_path);
  write_header(out, "fc2 align",
               json{{"mode", mode}, {"tokenize", tokenize_mode}, {"lexicon", lexicon_path}},
               0);
  for (const auto& g : grids) out << to_json(g).dump() << "\n";
  return 0;
}

// --- noise -----------------------------------------------------------------

int cmd_noise(const std::string& refs_path, const std::string& out_path,
              const std::string& profile_path, const std::string& lexicon_path,
              std::size_t n, int max_homophone_distance,
              const std::string& tokenize_mode, std::optional<std::uint64_t> seed_override) {
  Lexicon lex = load_lexicon(lexicon_path);
  auto pin = open_in(profile_path);
  NoiseProfile profile = noise_profile_from_json(json::parse(pin));
  if (seed_override) profile.seed = *seed_override;
  HomophoneTable table = build_homophone_table(lex, max_homophone_distance);
  TokenizeMode tmode = parse_mode(tokenize_mode);

  auto in = open_in(refs_path);
  auto refs = read_text_records(in);
  sort_by_id(refs);

  std::vector<BeamSet> out_beams;
  out_beams.reserve(refs.size());
  for (const auto& r : refs) {
    Sentence target = tokenize(r.text, tmode);
    RngStream rng = RngStream::keyed(profile.seed, r.utterance_id);
    out_beams.push_back(simulate_beams(target, n, profile, table, rng, r.utterance_id));
  }

  auto out = open_out(out_path);
  json cfg = to_json(profile);
  cfg["n"] = n;
  cfg["max_homophone_distance"] = max_homophone_distance;
  cfg["tokenize"] = tokenize_mode;
  write_header(out, "fc2 noise", cfg, profile.seed);
  write_beam_records(out, out_beams, tmode);
  return 0;
}

// --- extract-durations -----------------------------------------------------

int cmd_extract_durations(const std::string& grids_path, const std::string& refs_path,
                          const std::string& out_path, const std::string& lexicon_path,
                          const std::string& tokenize_mode) {
  Lexicon lex = load_lexicon(lexicon_path);
  TokenizeMode tmode = parse_mode(tokenize_mode);
  auto gin = open_in(grids_path);
  auto grids = read_grid_records(gin);
  sort_by_id(grids);
  auto rin = open_in(refs_path);
  auto refs = read_text_records(rin);

  std::map<std::string, Sentence> ref_by_id;
  for (const auto& r : refs) ref_by_id[r.utterance_id] = tokenize(r.text, tmode);

  std::vector<DurationRecord> out_recs;
  for (const auto& g : grids) {
    auto it = ref_by_id.find(g.utterance_id);
    if (it == ref_by_id.end())
      throw std::runtime_error("no reference for utterance " + g.utterance_id);
    DurationRecord rec;
    rec.utterance_id = g.utterance_id;
    rec.target_len = static_cast<int>(it->second.size());
    for (const auto& row : g.grid.rows)
      rec.rows.push_back(extract_durations(row, it->second, lex));
    out_recs.push_back(std::move(rec));
  }

  auto out = open_out(out_path);
  write_header(out, "fc2 extract-durations",
               json{{"tokenize", tokenize_mode}, {"lexicon", lexicon_path}}, 0);
  for (const auto& r : out_recs) out << to_json(r).dump() << "\n";
  return 0;
}

// --- train -------------------------------------------------------------------

int cmd_train(const std::string& beams_path, const std::string& out_path,
              const std::string& lexicon_path, const std::string& init_path,
              const std::string& log_path, const std::string& align_mode,
              const std::string& tokenize_mode, ModelConfig cfg, TrainOptions opts) {
  Lexicon lex = load_lexicon(lexicon_path);
  AlignMode amode = parse_align_mode(align_mode);
  auto in = open_in(beams_path);
  auto beams = read_beam_records(in, parse_mode(tokenize_mode));
  sort_by_id(beams);

  std::unique_ptr<CorrectionModel> model;
  if (!init_path.empty()) {
    model = load_checkpoint(init_path);
  } else {
    std::vector<Sentence> corpus;
    for (const auto& b : beams) {
      for (const auto& c : b.candidates) corpus.push_back(c);
      if (b.reference) corpus.push_back(*b.reference);
    }
    model = std::make_unique<CorrectionModel>(cfg, Vocab::build(corpus));
  }

  std::vector<TrainingExample> examples;
  std::size_t skipped = 0;
  for (const auto& b : beams) {
    auto ex = make_training_example(b, lex, model->config().beam_n, amode);
    if (ex)
      examples.push_back(std::move(*ex));
    else
      ++skipped;
  }
  if (examples.empty()) throw std::runtime_error("no trainable examples in corpus");
  if (skipped)
    std::cerr << "warning: skipped " << skipped << " unalignable or reference-less records\n";

  std::ofstream log;
  if (!log_path.empty()) {
    log = open_out(log_path);
    write_header(log, "fc2 train",
                 json{{"examples", examples.size()}, {"epochs", opts.epochs},
                      {"batch_size", opts.batch_size}, {"learning_rate", opts.learning_rate},
                      {"align_mode", align_mode}},
                 model->config().seed);
  }
  opts.log = [&](int step, const StepLosses& l) {
    json line{{"step", step},
              {"decoder_ce", l.decoder_ce},
              {"duration_mse", l.duration_mse},
              {"candidate_mse", l.candidate_mse},
              {"total", l.total(opts.lambda_dur, opts.lambda_cand)}};
    if (log.is_open()) log << line.dump() << "\n";
  };

  Trainer trainer(*model, opts);
  trainer.fit(examples);
  save_checkpoint(out_path, *model);
  std::cerr << "trained " << trainer.steps_taken() << " steps on " << examples.size()
            << " examples -> " << out_path << "\n";
  return 0;
}

// --- correct -----------------------------------------------------------------

int cmd_correct(const std::string& model_path, const std::string& in_path,
                const std::string& out_path, const std::string& lexicon_path,
                const std::string& strategy_name, std::uint64_t strategy_seed,
                const std::string& align_mode, const std::string& tokenize_mode) {
  Lexicon lex = load_lexicon(lexicon_path);
  auto model = load_checkpoint(model_path);
  SelectionStrategy strategy = SelectionStrategy::parse(strategy_name, strategy_seed);
  AlignMode amode = parse_align_mode(align_mode);
  TokenizeMode tmode = parse_mode(tokenize_mode);

  auto in = open_in(in_path);
  auto beams = read_beam_records(in, tmode);
  sort_by_id(beams);

  auto out = open_out(out_path);
  write_header(out, "fc2 correct",
               json{{"model", model_path}, {"strategy", strategy_name},
                    {"align_mode", align_mode}, {"tokenize", tokenize_mode}},
               strategy_seed);
  for (const auto& b : beams) {
    InferResult res = infer(*model, b, lex, strategy, amode);
    out << to_json(TextRecord{b.utterance_id, detokenize(res.corrected, tmode)}).dump()
        << "\n";
  }
  return 0;
}

// --- eval --------------------------------------------------------------------

int cmd_eval(const std::string& hyp_path, const std::string& ref_path,
             const std::string& baseline_path, const std::string& out_path,
             const std::string& tokenize_mode) {
  TokenizeMode tmode = parse_mode(tokenize_mode);
  auto hin = open_in(hyp_path);
  auto hyps = read_text_records(hin);
  sort_by_id(hyps);
  auto rin = open_in(ref_path);
  auto refs = read_text_records(rin);

  std::map<std::string, Sentence> ref_by_id;
  for (const auto& r : refs) ref_by_id[r.utterance_id] = tokenize(r.text, tmode);

  std::map<std::string, Sentence> base_by_id;
  if (!baseline_path.empty()) {
    auto bin = open_in(baseline_path);
    for (const auto& b : read_text_records(bin))
      base_by_id[b.utterance_id] = tokenize(b.text, tmode);
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file = open_out(out_path);
    out = &file;
  }
  write_header(*out, "fc2 eval",
               json{{"hyp", hyp_path}, {"ref", ref_path}, {"baseline", baseline_path}}, 0);

  ErrorRate corpus, base_corpus;
  for (const auto& h : hyps) {
    auto it = ref_by_id.find(h.utterance_id);
    if (it == ref_by_id.end())
      throw std::runtime_error("no reference for utterance " + h.utterance_id);
    ErrorRate e = wer(tokenize(h.text, tmode), it->second);
    corpus += e;
    json line{{"utterance_id", h.utterance_id},
              {"edits", e.edits},
              {"ref_len", e.ref_len}};
    if (e.rate_defined()) line["wer"] = e.rate();
    if (!base_by_id.empty()) {
      auto bit = base_by_id.find(h.utterance_id);
      if (bit == base_by_id.end())
        throw std::runtime_error("no baseline hypothesis for utterance " + h.utterance_id);
      base_corpus += wer(bit->second, it->second);
    }
    *out << line.dump() << "\n";
  }

  json summary{{"utterances", hyps.size()},
               {"edits", corpus.edits},
               {"ref_len", corpus.ref_len}};
  if (corpus.rate_defined()) summary["wer"] = corpus.rate();
  if (!base_by_id.empty() && base_corpus.rate_defined() && base_corpus.rate() > 0) {
    summary["baseline_wer"] = base_corpus.rate();
    summary["werr"] = werr(base_corpus, corpus);
  }
  *out << json{{"summary", summary}}.dump() << "\n";
  return 0;
}

// --- rover -------------------------------------------------------------------

int cmd_rover(const std::string& in_path, const std::string& out_path,
              const std::string& tokenize_mode) {
  TokenizeMode tmode = parse_mode(tokenize_mode);
  auto in = open_in(in_path);
  auto grids = read_grid_records(in);
  sort_by_id(grids);

  auto out = open_out(out_path);
  write_header(out, "fc2 rover", json::object(), 0);
  for (const auto& g : grids)
    out << to_json(TextRecord{g.utterance_id, detokenize(rover_vote(g.grid), tmode)}).dump()
        << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"n-best ASR error correction toolkit"};
  app.require_subcommand(1);

  std::string tokenize_mode = "whitespace";
  app.add_option("--tokenize", tokenize_mode, "token unit: whitespace or character")
      ->capture_default_str();

  // align
  auto* align = app.add_subcommand("align", "align n-best candidates into a grid");
  std::string a_in, a_out, a_lex, a_mode = "scored";
  align->add_option("--in", a_in, "beam records (jsonl)")->required();
  align->add_option("--out", a_out, "grid records (jsonl)")->required();
  align->add_option("--lexicon", a_lex, "pronunciation lexicon (tsv)")->required();
  align->add_option("--mode", a_mode, "scored or naive")->capture_default_str();

  // noise
  auto* noise = app.add_subcommand("noise", "synthesize noisy n-best candidates");
  std::string n_refs, n_out, n_profile, n_lex;
  std::size_t n_n = 4;
  int n_maxd = 1;
  std::uint64_t n_seed = 0;
  bool n_seed_set = false;
  noise->add_option("--refs", n_refs, "reference text records (jsonl)")->required();
  noise->add_option("--out", n_out, "beam records (jsonl)")->required();
  noise->add_option("--profile", n_profile, "noise profile (json)")->required();
  noise->add_option("--lexicon", n_lex, "pronunciation lexicon (tsv)")->required();
  noise->add_option("--n", n_n, "candidates per utterance")->capture_default_str();
  noise->add_option("--max-homophone-distance", n_maxd, "phoneme distance cap for substitutions")
      ->capture_default_str();
  noise->add_option("--seed", n_seed, "override the profile seed")
      ->each([&](const std::string&) { n_seed_set = true; });

  // extract-durations
  auto* durs = app.add_subcommand("extract-durations", "gold durations from grids and references");
  std::string d_grids, d_refs, d_out, d_lex;
  durs->add_option("--grids", d_grids, "grid records (jsonl)")->required();
  durs->add_option("--refs", d_refs, "reference text records (jsonl)")->required();
  durs->add_option("--out", d_out, "duration records (jsonl)")->required();
  durs->add_option("--lexicon", d_lex, "pronunciation lexicon (tsv)")->required();

  // train
  auto* train = app.add_subcommand("train", "train a correction model");
  std::string t_beams, t_out, t_lex, t_init, t_log, t_align = "scored";
  ModelConfig t_cfg;
  TrainOptions t_opts;
  train->add_option("--beams", t_beams, "beam records with references (jsonl)")->required();
  train->add_option("--out", t_out, "checkpoint path")->required();
  train->add_option("--lexicon", t_lex, "pronunciation lexicon (tsv)")->required();
  train->add_option("--init", t_init, "resume from this checkpoint");
  train->add_option("--log", t_log, "per-step loss log (jsonl)");
  train->add_option("--align-mode", t_align, "scored or naive")->capture_default_str();
  train->add_option("--hidden", t_cfg.hidden)->capture_default_str();
  train->add_option("--encoder-layers", t_cfg.encoder_layers)->capture_default_str();
  train->add_option("--decoder-layers", t_cfg.decoder_layers)->capture_default_str();
  train->add_option("--heads", t_cfg.attention_heads)->capture_default_str();
  train->add_option("--feed-forward", t_cfg.feed_forward)->capture_default_str();
  train->add_option("--beam-n", t_cfg.beam_n)->capture_default_str();
  train->add_option("--dur-conv-layers", t_cfg.dur_conv_layers)->capture_default_str();
  train->add_option("--dropout", t_cfg.dropout)->capture_default_str();
  train->add_option("--max-len", t_cfg.max_len)->capture_default_str();
  train->add_option("--seed", t_cfg.seed)->capture_default_str();
  train->add_option("--epochs", t_opts.epochs)->capture_default_str();
  train->add_option("--batch-size", t_opts.batch_size)->capture_default_str();
  train->add_option("--learning-rate", t_opts.learning_rate)->capture_default_str();
  train->add_option("--grad-clip", t_opts.grad_clip)->capture_default_str();
  train->add_option("--lambda-dur", t_opts.lambda_dur)->capture_default_str();
  train->add_option("--lambda-cand", t_opts.lambda_cand)->capture_default_str();
  train->add_option("--shuffle-seed", t_opts.shuffle_seed)->capture_default_str();

  // correct
  auto* correct = app.add_subcommand("correct", "run inference over beam records");
  std::string c_model, c_in, c_out, c_lex, c_strategy = "candidate_predictor",
              c_align = "scored";
  std::uint64_t c_seed = 0;
  correct->add_option("--model", c_model, "checkpoint path")->required();
  correct->add_option("--in", c_in, "beam records (jsonl)")->required();
  correct->add_option("--out", c_out, "corrected text records (jsonl)")->required();
  correct->add_option("--lexicon", c_lex, "pronunciation lexicon (tsv)")->required();
  correct->add_option("--strategy", c_strategy,
                      "candidate_predictor, wer_oracle, first_beam or random")
      ->capture_default_str();
  correct->add_option("--seed", c_seed, "seed for the random strategy")->capture_default_str();
  correct->add_option("--align-mode", c_align, "scored or naive")->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "corpus error-rate report");
  std::string e_hyp, e_ref, e_base, e_out;
  eval->add_option("--hyp", e_hyp, "hypothesis text records (jsonl)")->required();
  eval->add_option("--ref", e_ref, "reference text records (jsonl)")->required();
  eval->add_option("--baseline", e_base, "baseline hypotheses for relative reduction");
  eval->add_option("--out", e_out, "report path (default stdout)");

  // rover
  auto* rover = app.add_subcommand("rover", "occurrence voting over grid records");
  std::string r_in, r_out;
  rover->add_option("--in", r_in, "grid records (jsonl)")->required();
  rover->add_option("--out", r_out, "text records (jsonl)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (align->parsed()) return cmd_align(a_in, a_out, a_lex, a_mode, tokenize_mode);
    if (noise->parsed())
      return cmd_noise(n_refs, n_out, n_profile, n_lex, n_n, n_maxd, tokenize_mode,
                       n_seed_set ? std::optional<std::uint64_t>(n_seed) : std::nullopt);
    if (durs->parsed())
      return cmd_extract_durations(d_grids, d_refs, d_out, d_lex, tokenize_mode);
    if (train->parsed())
      return cmd_train(t_beams, t_out, t_lex, t_init, t_log, t_align, tokenize_mode,
                       t_cfg, t_opts);
    if (correct->parsed())
      return cmd_correct(c_model, c_in, c_out, c_lex, c_strategy, c_seed, c_align,
                         tokenize_mode);
    if (eval->parsed()) return cmd_eval(e_hyp, e_ref, e_base, e_out, tokenize_mode);
    if (rover->parsed()) return cmd_rover(r_in, r_out, tokenize_mode);
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", {{"message", e.what()}}}}.dump() << std::endl;
    return 1;
  }
  return 2;  // unreachable: require_subcommand(1)
}
