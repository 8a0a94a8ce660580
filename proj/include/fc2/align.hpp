#ifndef FC2_ALIGN_HPP_
#define FC2_ALIGN_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fc2/core.hpp"
#include "fc2/phonetics.hpp"

namespace fc2 {

enum class OpKind { Identity, Substitution, Insertion, Deletion };

inline const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::Identity: return "I";
    case OpKind::Substitution: return "S";
    case OpKind::Insertion: return "+";
    case OpKind::Deletion: return "-";
  }
  return "?";
}

// One alignment column. Insertion has an empty a-side, deletion an empty
// b-side, identity/substitution carry both tokens.
struct EditOp {
  OpKind kind;
  Token a_tok;
  Token b_tok;
};

struct EditPath {
  std::vector<EditOp> ops;
  int match_score = 0;        // count of Identity columns (G)
  long long pron_score = 0;   // sum of per-column pron_similarity (P)
};

struct PairAlignment {
  std::vector<Token> row_a;
  std::vector<Token> row_b;
};

// n rows of equal length over Token-or-Ø; stripping Ø from row i recovers
// candidate i.
struct AlignmentGrid {
  std::vector<std::vector<Token>> rows;
  std::size_t anchor_index = 0;

  std::size_t width() const { return rows.empty() ? 0 : rows.front().size(); }
};

inline std::size_t edit_distance(const Sentence& a, const Sentence& b) {
  return levenshtein(a, b);
}

inline Sentence strip_empty(const std::vector<Token>& row) {
  Sentence s;
  for (const auto& t : row)
    if (!is_empty_token(t)) s.push_back(t);
  return s;
}

namespace detail {

// Per-column pronunciation scores for a pair of sentences.
struct PronTable {
  std::vector<std::vector<int>> sub;  // a[i] vs b[j]
  std::vector<int> del;               // a[i] vs Ø
  std::vector<int> ins;               // Ø vs b[j]

  PronTable(const Sentence& a, const Sentence& b, const Lexicon& lex) {
    std::vector<PhonemeSeq> pa, pb;
    pa.reserve(a.size());
    pb.reserve(b.size());
    for (const auto& t : a) pa.push_back(lex.phonemes(t));
    for (const auto& t : b) pb.push_back(lex.phonemes(t));
    sub.assign(a.size(), std::vector<int>(b.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j)
        sub[i][j] = a[i] == b[j] ? 0 : pron_similarity(pa[i], pb[j]);
    del.resize(a.size());
    ins.resize(b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      del[i] = -static_cast<int>(pa[i].size());
    for (std::size_t j = 0; j < b.size(); ++j)
      ins[j] = -static_cast<int>(pb[j].size());
  }
};

struct PathValue {
  int dist = 0;
  int match = 0;
  long long pron = 0;

  // Minimal distance first, then maximal match score, then maximal
  // pronunciation score.
  bool better_than(const PathValue& o) const {
    if (dist != o.dist) return dist < o.dist;
    if (match != o.match) return match > o.match;
    return pron > o.pron;
  }
  bool operator==(const PathValue& o) const {
    return dist == o.dist && match == o.match && pron == o.pron;
  }
};

}  // namespace detail

// The minimal-edit path maximizing (G, P) lexicographically, remaining ties
// broken per column by Identity > Substitution > Insertion > Deletion,
// applied left to right. Exact because all three scores are additive per
// column.
inline EditPath best_edit_path(const Sentence& a, const Sentence& b, const Lexicon& lex) {
  using detail::PathValue;
  const std::size_t n = a.size(), m = b.size();
  detail::PronTable pt(a, b, lex);

  // best[i][j]: optimal value aligning a[i..) with b[j..).
  std::vector<std::vector<PathValue>> best(n + 1, std::vector<PathValue>(m + 1));
  best[n][m] = PathValue{0, 0, 0};
  for (std::size_t j = m; j-- > 0;) {
    best[n][j] = best[n][j + 1];
    best[n][j].dist += 1;
    best[n][j].pron += pt.ins[j];
  }
  for (std::size_t i = n; i-- > 0;) {
    best[i][m] = best[i + 1][m];
    best[i][m].dist += 1;
    best[i][m].pron += pt.del[i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      bool eq = a[i] == b[j];
      PathValue diag = best[i + 1][j + 1];
      diag.dist += eq ? 0 : 1;
      diag.match += eq ? 1 : 0;
      diag.pron += pt.sub[i][j];
      PathValue ins = best[i][j + 1];
      ins.dist += 1;
      ins.pron += pt.ins[j];
      PathValue del = best[i + 1][j];
      del.dist += 1;
      del.pron += pt.del[i];
      PathValue v = diag;
      if (ins.better_than(v)) v = ins;
      if (del.better_than(v)) v = del;
      best[i][j] = v;
    }
  }

  EditPath path;
  std::size_t i = 0, j = 0;
  while (i < n || j < m) {
    const PathValue& here = best[i][j];
    // Candidate moves in tie-break priority order. The diagonal is identity
    // or substitution depending on token equality, so kinds never collide.
    if (i < n && j < m) {
      bool eq = a[i] == b[j];
      PathValue diag = best[i + 1][j + 1];
      diag.dist += eq ? 0 : 1;
      diag.match += eq ? 1 : 0;
      diag.pron += pt.sub[i][j];
      if (eq && diag == here) {
        path.ops.push_back({OpKind::Identity, a[i], b[j]});
        ++i, ++j;
        continue;
      }
      if (!eq && diag == here) {
        path.ops.push_back({OpKind::Substitution, a[i], b[j]});
        ++i, ++j;
        continue;
      }
    }
    if (j < m) {
      PathValue ins = best[i][j + 1];
      ins.dist += 1;
      ins.pron += pt.ins[j];
      if (ins == here) {
        path.ops.push_back({OpKind::Insertion, kEmptyToken, b[j]});
        ++j;
        continue;
      }
    }
    // Deletion is the only remaining option.
    path.ops.push_back({OpKind::Deletion, a[i], kEmptyToken});
    ++i;
  }
  path.match_score = best[0][0].match;
  path.pron_score = best[0][0].pron;
  return path;
}

struct PathEnumeration {
  std::vector<EditPath> paths;
  bool truncated = false;
};

// Exhaustive traceback of every minimal-edit path, scored with the same
// per-column rules as best_edit_path. Exponential; intended as a
// small-instance oracle. Stops (and flags) once `cap` paths are collected.
inline PathEnumeration enumerate_min_paths(const Sentence& a, const Sentence& b,
                                           std::size_t cap, const Lexicon& lex) {
  const std::size_t n = a.size(), m = b.size();
  detail::PronTable pt(a, b, lex);

  std::vector<std::vector<int>> dist(n + 1, std::vector<int>(m + 1));
  for (std::size_t j = 0; j <= m; ++j) dist[n][j] = static_cast<int>(m - j);
  for (std::size_t i = 0; i <= n; ++i) dist[i][m] = static_cast<int>(n - i);
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;) {
      int d = dist[i + 1][j + 1] + (a[i] == b[j] ? 0 : 1);
      d = std::min(d, dist[i][j + 1] + 1);
      d = std::min(d, dist[i + 1][j] + 1);
      dist[i][j] = d;
    }

  PathEnumeration out;
  std::vector<EditOp> ops;
  // Depth-first over all optimal moves.
  auto walk = [&](auto&& self, std::size_t i, std::size_t j) -> void {
    if (out.truncated) return;
    if (i == n && j == m) {
      if (out.paths.size() >= cap) {
        out.truncated = true;
        return;
      }
      EditPath p;
      p.ops = ops;
      for (const auto& op : p.ops) {
        if (op.kind == OpKind::Identity) p.match_score += 1;
        p.pron_score += pron_similarity(lex.phonemes(op.a_tok), lex.phonemes(op.b_tok));
      }
      out.paths.push_back(std::move(p));
      return;
    }
    if (i < n && j < m && dist[i][j] == dist[i + 1][j + 1] + (a[i] == b[j] ? 0 : 1)) {
      ops.push_back({a[i] == b[j] ? OpKind::Identity : OpKind::Substitution, a[i], b[j]});
      self(self, i + 1, j + 1);
      ops.pop_back();
    }
    if (j < m && dist[i][j] == dist[i][j + 1] + 1) {
      ops.push_back({OpKind::Insertion, kEmptyToken, b[j]});
      self(self, i, j + 1);
      ops.pop_back();
    }
    if (i < n && dist[i][j] == dist[i + 1][j] + 1) {
      ops.push_back({OpKind::Deletion, a[i], kEmptyToken});
      self(self, i + 1, j);
      ops.pop_back();
    }
  };
  walk(walk, 0, 0);
  return out;
}

inline PairAlignment to_alignment(const EditPath& path) {
  PairAlignment pa;
  pa.row_a.reserve(path.ops.size());
  pa.row_b.reserve(path.ops.size());
  for (const auto& op : path.ops) {
    pa.row_a.push_back(op.a_tok);
    pa.row_b.push_back(op.b_tok);
  }
  return pa;
}

inline PairAlignment align_pair(const Sentence& a, const Sentence& b, const Lexicon& lex) {
  return to_alignment(best_edit_path(a, b, lex));
}

// Merge all candidates around the first beam candidate as anchor. Each
// non-anchor candidate is pair-aligned against the anchor; its inserted
// tokens land in the gap before/after the matching anchor position. Gaps
// expand to the widest insertion run over all candidates, left-justified
// and Ø-padded per candidate.
inline AlignmentGrid align_candidates(const BeamSet& beams, const Lexicon& lex) {
  if (beams.candidates.empty())
    throw std::invalid_argument("align_candidates: empty beam set");
  const std::size_t n = beams.candidates.size();
  const Sentence& anchor = beams.candidates.front();
  const std::size_t al = anchor.size();

  AlignmentGrid grid;
  grid.anchor_index = 0;
  if (n == 1) {
    grid.rows.push_back(anchor);
    return grid;
  }

  // Per candidate: token aligned to each anchor position (Ø on deletion),
  // and inserted tokens per gap g in [0, al] (gap g precedes anchor[g]).
  std::vector<std::vector<Token>> at_anchor(n - 1, std::vector<Token>(al));
  std::vector<std::vector<std::vector<Token>>> gaps(
      n - 1, std::vector<std::vector<Token>>(al + 1));
  std::vector<std::size_t> gap_width(al + 1, 0);

  for (std::size_t c = 1; c < n; ++c) {
    EditPath path = best_edit_path(anchor, beams.candidates[c], lex);
    std::size_t apos = 0;
    for (const auto& op : path.ops) {
      if (op.kind == OpKind::Insertion) {
        gaps[c - 1][apos].push_back(op.b_tok);
      } else {
        at_anchor[c - 1][apos] = op.b_tok;  // Ø when deleted
        ++apos;
      }
    }
    for (std::size_t g = 0; g <= al; ++g)
      gap_width[g] = std::max(gap_width[g], gaps[c - 1][g].size());
  }

  grid.rows.assign(n, {});
  for (std::size_t g = 0; g <= al; ++g) {
    for (std::size_t k = 0; k < gap_width[g]; ++k) {
      grid.rows[0].push_back(kEmptyToken);
      for (std::size_t c = 1; c < n; ++c)
        grid.rows[c].push_back(k < gaps[c - 1][g].size() ? gaps[c - 1][g][k]
                                                         : kEmptyToken);
    }
    if (g < al) {
      grid.rows[0].push_back(anchor[g]);
      for (std::size_t c = 1; c < n; ++c)
        grid.rows[c].push_back(at_anchor[c - 1][g]);
    }
  }
  return grid;
}

// Right-pad every candidate with Ø to the longest length.
inline AlignmentGrid naive_pad_align(const BeamSet& beams) {
  if (beams.candidates.empty())
    throw std::invalid_argument("naive_pad_align: empty beam set");
  std::size_t width = 0;
  for (const auto& c : beams.candidates) width = std::max(width, c.size());
  AlignmentGrid grid;
  grid.anchor_index = 0;
  for (const auto& c : beams.candidates) {
    std::vector<Token> row = c;
    row.resize(width, kEmptyToken);
    grid.rows.push_back(std::move(row));
  }
  return grid;
}

}  // namespace fc2

#endif  // FC2_ALIGN_HPP_
