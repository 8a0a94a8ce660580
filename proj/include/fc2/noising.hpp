#ifndef FC2_NOISING_HPP_
#define FC2_NOISING_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fc2/align.hpp"
#include "fc2/core.hpp"
#include "fc2/phonetics.hpp"
#include "fc2/rng.hpp"

namespace fc2 {

struct NoiseProfile {
  double target_wer = 0.0;
  double p_insertion = 0.0;
  double p_deletion = 0.0;
  double p_substitution = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (target_wer < 0.0 || target_wer >= 1.0)
      throw std::invalid_argument("noise profile: target_wer must be in [0,1)");
    if (p_insertion < 0 || p_deletion < 0 || p_substitution < 0 ||
        std::abs(p_insertion + p_deletion + p_substitution - 1.0) > 1e-9)
      throw std::invalid_argument("noise profile: op probabilities must sum to 1");
  }
};

// Token -> replacement tokens within max phoneme distance, sorted by
// (distance, token text); exact homophones first. Also carries the lexicon
// vocabulary for insertion draws and substitution fallback.
struct HomophoneTable {
  std::map<Token, std::vector<std::pair<int, Token>>> neighbors;
  std::vector<Token> vocabulary;  // sorted lexicon tokens

  // Replacement for `tok`: uniform among exact homophones when any exist,
  // else uniform among all neighbors, else uniform vocabulary (excluding
  // the token itself). `fallback_count`, when given, tallies vocab draws.
  Token substitute(const Token& tok, RngStream& rng, std::size_t* fallback_count = nullptr) const {
    auto it = neighbors.find(tok);
    if (it != neighbors.end() && !it->second.empty()) {
      const auto& list = it->second;
      std::size_t zero = 0;
      while (zero < list.size() && list[zero].first == 0) ++zero;
      if (zero > 0) return list[rng.next_index(zero)].second;
      return list[rng.next_index(list.size())].second;
    }
    if (fallback_count) ++*fallback_count;
    if (vocabulary.empty()) return tok;
    for (int tries = 0; tries < 16; ++tries) {
      const Token& pick = vocabulary[rng.next_index(vocabulary.size())];
      if (pick != tok) return pick;
    }
    return vocabulary.front() != tok || vocabulary.size() < 2 ? vocabulary.front()
                                                              : vocabulary[1];
  }
};

inline HomophoneTable build_homophone_table(const Lexicon& lex, int max_distance) {
  HomophoneTable table;
  table.vocabulary = lex.tokens_sorted();
  std::vector<PhonemeSeq> phon;
  phon.reserve(table.vocabulary.size());
  for (const auto& t : table.vocabulary) phon.push_back(lex.phonemes(t));
  for (std::size_t i = 0; i < table.vocabulary.size(); ++i) {
    std::vector<std::pair<int, Token>> list;
    for (std::size_t j = 0; j < table.vocabulary.size(); ++j) {
      if (i == j) continue;
      int d = static_cast<int>(phoneme_edit_distance(phon[i], phon[j]));
      if (d <= max_distance) list.emplace_back(d, table.vocabulary[j]);
    }
    if (!list.empty()) {
      std::sort(list.begin(), list.end());
      table.neighbors[table.vocabulary[i]] = std::move(list);
    }
  }
  return table;
}

// Corpus-level error statistics from (hypothesis, reference) pairs. Op
// counts come from the same minimal-edit backtrace as align_pair, taken in
// the noising direction (reference -> hypothesis).
inline NoiseProfile measure_error_stats(
    const std::vector<std::pair<Sentence, Sentence>>& pairs, const Lexicon& lex,
    std::vector<std::string>* warnings = nullptr) {
  if (pairs.empty()) throw std::invalid_argument("measure_error_stats: no pairs");
  ErrorRate corpus;
  std::size_t ins = 0, del = 0, sub = 0;
  for (const auto& [hyp, ref] : pairs) {
    corpus += ErrorRate{0, ref.size()};
    EditPath path = best_edit_path(ref, hyp, lex);
    for (const auto& op : path.ops) {
      switch (op.kind) {
        case OpKind::Identity: break;
        case OpKind::Substitution: ++sub, ++corpus.edits; break;
        case OpKind::Insertion: ++ins, ++corpus.edits; break;  // extra hyp token
        case OpKind::Deletion: ++del, ++corpus.edits; break;   // missing ref token
      }
    }
  }
  NoiseProfile profile;
  profile.target_wer = corpus.ref_len ? corpus.rate() : 0.0;
  std::size_t total = ins + del + sub;
  if (total == 0) {
    if (warnings)
      warnings->push_back("no errors in corpus; using uniform op distribution");
    profile.p_insertion = profile.p_deletion = profile.p_substitution = 1.0 / 3.0;
  } else {
    profile.p_insertion = static_cast<double>(ins) / total;
    profile.p_deletion = static_cast<double>(del) / total;
    profile.p_substitution = static_cast<double>(sub) / total;
  }
  return profile;
}

// Corrupt each position independently with probability `rate`: homophone
// substitution, deletion, or insertion of a vocabulary token after the
// position.
inline Sentence apply_noise_at_rate(const Sentence& sent, double rate,
                                    const NoiseProfile& profile,
                                    const HomophoneTable& table, RngStream& rng,
                                    std::size_t* fallback_count = nullptr) {
  Sentence out;
  out.reserve(sent.size() + 2);
  for (const auto& tok : sent) {
    if (rng.next_double() >= rate) {
      out.push_back(tok);
      continue;
    }
    double u = rng.next_double();
    if (u < profile.p_substitution) {
      out.push_back(table.substitute(tok, rng, fallback_count));
    } else if (u < profile.p_substitution + profile.p_deletion) {
      // drop
    } else {
      out.push_back(tok);
      if (!table.vocabulary.empty())
        out.push_back(table.vocabulary[rng.next_index(table.vocabulary.size())]);
    }
  }
  return out;
}

inline Sentence apply_noise(const Sentence& sent, const NoiseProfile& profile,
                            const HomophoneTable& table, RngStream& rng,
                            std::size_t* fallback_count = nullptr) {
  profile.validate();
  return apply_noise_at_rate(sent, profile.target_wer, profile, table, rng,
                             fallback_count);
}

// n noisy candidates of `target` with per-candidate error rates jittered
// ±30% (relative) around target_wer and sorted ascending, so candidate 0
// plays the role of the best-scored beam entry.
inline BeamSet simulate_beams(const Sentence& target, std::size_t n,
                              const NoiseProfile& profile, const HomophoneTable& table,
                              RngStream& rng, std::string utterance_id = {}) {
  if (n == 0) throw std::invalid_argument("simulate_beams: n must be >= 1");
  profile.validate();
  std::vector<double> rates(n);
  for (auto& r : rates) {
    double jitter = 1.0 + 0.3 * (2.0 * rng.next_double() - 1.0);
    r = std::min(0.999, std::max(0.0, profile.target_wer * jitter));
  }
  std::sort(rates.begin(), rates.end());
  BeamSet beams;
  beams.utterance_id = std::move(utterance_id);
  beams.reference = target;
  for (std::size_t i = 0; i < n; ++i)
    beams.candidates.push_back(apply_noise_at_rate(target, rates[i], profile, table, rng));
  return beams;
}

// Data-augmentation expansion: every candidate paired with the reference.
inline std::vector<std::pair<Sentence, Sentence>> expand_pairs(const BeamSet& beams) {
  if (!beams.reference)
    throw std::invalid_argument("expand_pairs: beam set has no reference");
  std::vector<std::pair<Sentence, Sentence>> pairs;
  pairs.reserve(beams.candidates.size());
  for (const auto& c : beams.candidates) pairs.emplace_back(c, *beams.reference);
  return pairs;
}

}  // namespace fc2

#endif  // FC2_NOISING_HPP_
