#ifndef FC2_RECORDS_HPP_
#define FC2_RECORDS_HPP_

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fc2/align.hpp"
#include "fc2/core.hpp"
#include "fc2/duration.hpp"
#include "fc2/noising.hpp"
#include "fc2/rng.hpp"

// Line-delimited JSON record formats shared by the CLI tools. The reserved
// empty token Ø is serialized as the empty string, which no surface token
// can collide with. Output files start with a single header record
// {"header": {...}} carrying the tool name, config hash and seed; readers
// skip it.

namespace fc2 {

using json = nlohmann::json;

struct RecordParseError : std::runtime_error {
  RecordParseError(std::size_t line_no, const std::string& what)
      : std::runtime_error("record line " + std::to_string(line_no) + ": " + what),
        line(line_no) {}
  std::size_t line;
};

struct TextRecord {
  std::string utterance_id;
  std::string text;
};

struct GridRecord {
  std::string utterance_id;
  AlignmentGrid grid;
};

struct DurationRecord {
  std::string utterance_id;
  std::vector<DurationLabels> rows;
  int target_len = 0;
};

inline json make_header(const std::string& tool, const json& config,
                        std::uint64_t seed) {
  std::string canon = config.dump();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(RngStream::fnv1a(canon)));
  return json{{"header", {{"tool", tool}, {"config_hash", buf}, {"seed", seed}, {"config", config}}}};
}

inline void write_header(std::ostream& out, const std::string& tool,
                         const json& config, std::uint64_t seed) {
  out << make_header(tool, config, seed).dump() << "\n";
}

namespace detail {

// Reads JSONL skipping blank lines and header records; calls fn(line_no, json).
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw RecordParseError(line_no, e.what());
    }
    if (j.contains("header")) continue;
    fn(line_no, j);
  }
}

inline Sentence sentence_from_json(const json& arr, std::size_t line_no,
                                   bool allow_empty_token) {
  if (!arr.is_array()) throw RecordParseError(line_no, "expected a token array");
  Sentence s;
  for (const auto& t : arr) {
    if (!t.is_string()) throw RecordParseError(line_no, "token is not a string");
    Token tok = t.get<Token>();
    if (tok.empty() && !allow_empty_token)
      throw RecordParseError(line_no, "empty token not allowed here");
    s.push_back(std::move(tok));
  }
  return s;
}

}  // namespace detail

// --- beam set records: {"utterance_id", "candidates": [str...], "reference"?}

inline json to_json(const BeamSet& beams, TokenizeMode mode) {
  json cands = json::array();
  for (const auto& c : beams.candidates) cands.push_back(detokenize(c, mode));
  json j{{"utterance_id", beams.utterance_id}, {"candidates", cands}};
  if (beams.reference) j["reference"] = detokenize(*beams.reference, mode);
  return j;
}

inline std::vector<BeamSet> read_beam_records(std::istream& in, TokenizeMode mode) {
  std::vector<BeamSet> out;
  detail::for_each_record(in, [&](std::size_t line_no, const json& j) {
    BeamSet b;
    if (!j.contains("utterance_id") || !j.contains("candidates"))
      throw RecordParseError(line_no, "missing utterance_id or candidates");
    b.utterance_id = j.at("utterance_id").get<std::string>();
    if (!j.at("candidates").is_array() || j.at("candidates").empty())
      throw RecordParseError(line_no, "candidates must be a non-empty array");
    for (const auto& c : j.at("candidates"))
      b.candidates.push_back(tokenize(c.get<std::string>(), mode));
    if (j.contains("reference") && !j.at("reference").is_null())
      b.reference = tokenize(j.at("reference").get<std::string>(), mode);
    out.push_back(std::move(b));
  });
  return out;
}

inline void write_beam_records(std::ostream& out, const std::vector<BeamSet>& beams,
                               TokenizeMode mode) {
  for (const auto& b : beams) out << to_json(b, mode).dump() << "\n";
}

// --- grid records: {"utterance_id", "anchor_index", "rows": [[tok...]...]}

inline json to_json(const GridRecord& rec) {
  json rows = json::array();
  for (const auto& r : rec.grid.rows) rows.push_back(r);
  return json{{"utterance_id", rec.utterance_id},
              {"anchor_index", rec.grid.anchor_index},
              {"rows", rows}};
}

inline std::vector<GridRecord> read_grid_records(std::istream& in) {
  std::vector<GridRecord> out;
  detail::for_each_record(in, [&](std::size_t line_no, const json& j) {
    GridRecord rec;
    if (!j.contains("utterance_id") || !j.contains("rows"))
      throw RecordParseError(line_no, "missing utterance_id or rows");
    rec.utterance_id = j.at("utterance_id").get<std::string>();
    rec.grid.anchor_index = j.value("anchor_index", 0);
    std::size_t width = 0;
    for (const auto& r : j.at("rows")) {
      auto row = detail::sentence_from_json(r, line_no, /*allow_empty_token=*/true);
      if (!rec.grid.rows.empty() && row.size() != width)
        throw RecordParseError(line_no, "grid rows differ in length");
      width = row.size();
      rec.grid.rows.push_back(std::move(row));
    }
    if (rec.grid.rows.empty()) throw RecordParseError(line_no, "grid has no rows");
    out.push_back(std::move(rec));
  });
  return out;
}

// --- duration records: {"utterance_id", "target_len", "durations": [[int...]...]}

inline json to_json(const DurationRecord& rec) {
  json rows = json::array();
  for (const auto& r : rec.rows) rows.push_back(r.durations);
  return json{{"utterance_id", rec.utterance_id},
              {"target_len", rec.target_len},
              {"durations", rows}};
}

inline std::vector<DurationRecord> read_duration_records(std::istream& in) {
  std::vector<DurationRecord> out;
  detail::for_each_record(in, [&](std::size_t line_no, const json& j) {
    DurationRecord rec;
    rec.utterance_id = j.at("utterance_id").get<std::string>();
    rec.target_len = j.at("target_len").get<int>();
    for (const auto& r : j.at("durations")) {
      DurationLabels labels;
      labels.durations = r.get<std::vector<int>>();
      if (labels.sum() != rec.target_len)
        throw RecordParseError(line_no, "duration row does not sum to target_len");
      rec.rows.push_back(std::move(labels));
    }
    out.push_back(std::move(rec));
  });
  return out;
}

// --- text records: {"utterance_id", "text"}

inline json to_json(const TextRecord& rec) {
  return json{{"utterance_id", rec.utterance_id}, {"text", rec.text}};
}

inline std::vector<TextRecord> read_text_records(std::istream& in) {
  std::vector<TextRecord> out;
  detail::for_each_record(in, [&](std::size_t line_no, const json& j) {
    if (!j.contains("utterance_id") || !j.contains("text"))
      throw RecordParseError(line_no, "missing utterance_id or text");
    out.push_back({j.at("utterance_id").get<std::string>(),
                   j.at("text").get<std::string>()});
  });
  return out;
}

// --- noise profile config: {"target_wer", "p_insertion", "p_deletion",
//     "p_substitution", "seed"}

inline json to_json(const NoiseProfile& p) {
  return json{{"target_wer", p.target_wer},
              {"p_insertion", p.p_insertion},
              {"p_deletion", p.p_deletion},
              {"p_substitution", p.p_substitution},
              {"seed", p.seed}};
}

inline NoiseProfile noise_profile_from_json(const json& j) {
  NoiseProfile p;
  p.target_wer = j.at("target_wer").get<double>();
  p.p_insertion = j.at("p_insertion").get<double>();
  p.p_deletion = j.at("p_deletion").get<double>();
  p.p_substitution = j.at("p_substitution").get<double>();
  p.seed = j.value("seed", 0ull);
  p.validate();
  return p;
}

}  // namespace fc2

#endif  // FC2_RECORDS_HPP_
