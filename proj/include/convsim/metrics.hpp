// convsim/metrics.hpp

// Copyright 2026  The convsim authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Transcription and diarization scoring.
//
// WER is plain Levenshtein word alignment. cpWER splits both transcripts at
// `<sc>` and takes the minimum WER over hypothesis segment orderings —
// exhaustive up to 8 segments, local-search beyond (flagged approximate).
// SegAcc compares `<sc>`-segment counts. DER maps hypothesis speakers to
// reference speakers optimally (Hungarian assignment on pairwise overlap
// durations) and scores miss / false alarm / confusion with an exact
// boundary-event sweep rather than frame sampling; an optional collar
// excludes +-collar_s around reference segment boundaries.

#ifndef CONVSIM_METRICS_HPP_
#define CONVSIM_METRICS_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "convsim/error.hpp"

namespace convsim {

// ---------------------------------------------------------------------------
// Tokenization and SOT segment handling
// ---------------------------------------------------------------------------

/// Lowercases, strips punctuation except apostrophes, removes `<sc>` tokens,
/// and splits on whitespace. WER and cpWER assume this normalization.
inline std::vector<std::string> tokenize_transcript(const std::string& text) {
  std::string cleaned = text;
  for (std::size_t pos; (pos = cleaned.find("<sc>")) != std::string::npos;)
    cleaned.replace(pos, 4, " ");
  std::vector<std::string> out;
  std::string word;
  for (char ch : cleaned) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!word.empty()) out.push_back(std::move(word)), word.clear();
    } else if (std::isalnum(c) || ch == '\'') {
      word += static_cast<char>(std::tolower(c));
    }
  }
  if (!word.empty()) out.push_back(std::move(word));
  return out;
}

/// Splits a serialized transcript at `<sc>` tokens. Always returns
/// (number of `<sc>` occurrences + 1) segments; segments may be empty.
inline std::vector<std::string> split_sot_segments(const std::string& sot) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t pos; (pos = sot.find("<sc>", start)) != std::string::npos;
       start = pos + 4) {
    out.push_back(sot.substr(start, pos - start));
  }
  out.push_back(sot.substr(start));
  return out;
}

inline int sot_segment_count(const std::string& sot) {
  return static_cast<int>(split_sot_segments(sot).size());
}

// ---------------------------------------------------------------------------
// WER
// ---------------------------------------------------------------------------

struct WordAlignment {
  int substitutions = 0;
  int insertions = 0;
  int deletions = 0;
  int hits = 0;
  int ref_len = 0;
};

struct WerResult {
  double rate = 0.0;
  WordAlignment alignment;
};

/// Levenshtein alignment with unit costs; rate = (S+I+D)/ref_len. An empty
/// reference scores 0 against an empty hypothesis and rate = I against a
/// non-empty one. Backtrace prefers match/substitution, then deletion.
inline WerResult wer(const std::vector<std::string>& ref,
                     const std::vector<std::string>& hyp) {
  const std::size_t m = ref.size(), n = hyp.size();
  WerResult res;
  res.alignment.ref_len = static_cast<int>(m);
  if (m == 0) {
    res.alignment.insertions = static_cast<int>(n);
    res.rate = static_cast<double>(n);
    return res;
  }

  std::vector<std::vector<std::int32_t>> d(m + 1, std::vector<std::int32_t>(n + 1));
  for (std::size_t i = 0; i <= m; ++i) d[i][0] = static_cast<std::int32_t>(i);
  for (std::size_t j = 0; j <= n; ++j) d[0][j] = static_cast<std::int32_t>(j);
  for (std::size_t i = 1; i <= m; ++i)
    for (std::size_t j = 1; j <= n; ++j) {
      const std::int32_t sub = d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }

  std::size_t i = m, j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        d[i][j] == d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      ref[i - 1] == hyp[j - 1] ? ++res.alignment.hits : ++res.alignment.substitutions;
      --i, --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++res.alignment.deletions;
      --i;
    } else {
      ++res.alignment.insertions;
      --j;
    }
  }
  res.rate = static_cast<double>(res.alignment.substitutions +
                                 res.alignment.insertions +
                                 res.alignment.deletions) /
             static_cast<double>(m);
  return res;
}

inline WerResult wer(const std::string& ref_text, const std::string& hyp_text) {
  return wer(tokenize_transcript(ref_text), tokenize_transcript(hyp_text));
}

// ---------------------------------------------------------------------------
// cpWER
// ---------------------------------------------------------------------------

struct CpWerResult {
  double rate = 0.0;
  WordAlignment alignment;
  std::vector<std::size_t> hyp_order;  // best permutation found
  bool approximate = false;            // true when the search was not exhaustive
};

namespace metrics_detail {

inline std::vector<std::string> concat_segments(
    const std::vector<std::vector<std::string>>& segs,
    const std::vector<std::size_t>& order) {
  std::vector<std::string> out;
  for (std::size_t idx : order)
    out.insert(out.end(), segs[idx].begin(), segs[idx].end());
  return out;
}

}  // namespace metrics_detail

/// Minimum WER over orderings of the hypothesis's `<sc>` segments against the
/// concatenated reference. Exhaustive for <= max_exhaustive segments; above
/// that, repeated best-single-move local search from the identity order, so
/// the result never exceeds the identity (plain WER) score.
inline CpWerResult cpwer(const std::string& ref_sot, const std::string& hyp_sot,
                         std::size_t max_exhaustive = 8) {
  const std::vector<std::string> ref = tokenize_transcript(ref_sot);
  std::vector<std::vector<std::string>> segs;
  for (const auto& s : split_sot_segments(hyp_sot))
    segs.push_back(tokenize_transcript(s));

  CpWerResult best;
  best.rate = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(segs.size());
  std::iota(order.begin(), order.end(), 0);

  auto consider = [&](const std::vector<std::size_t>& ord) {
    const WerResult r = wer(ref, metrics_detail::concat_segments(segs, ord));
    if (r.rate < best.rate) {
      best.rate = r.rate;
      best.alignment = r.alignment;
      best.hyp_order = ord;
    }
  };

  if (segs.size() <= max_exhaustive) {
    do consider(order);
    while (std::next_permutation(order.begin(), order.end()));
    return best;
  }

  best.approximate = true;
  consider(order);
  std::vector<std::size_t> current = best.hyp_order;
  for (int pass = 0; pass < 10; ++pass) {
    const double before = best.rate;
    for (std::size_t i = 0; i < current.size(); ++i)
      for (std::size_t j = 0; j < current.size(); ++j) {
        if (i == j) continue;
        std::vector<std::size_t> moved = current;
        const std::size_t seg = moved[i];
        moved.erase(moved.begin() + static_cast<std::ptrdiff_t>(i));
        moved.insert(moved.begin() + static_cast<std::ptrdiff_t>(j), seg);
        consider(moved);
      }
    if (best.rate >= before) break;
    current = best.hyp_order;
  }
  return best;
}

// ---------------------------------------------------------------------------
// SegAcc
// ---------------------------------------------------------------------------

/// Percentage of pairs whose `<sc>`-segment counts agree.
inline double seg_acc(const std::vector<std::pair<std::string, std::string>>& pairs) {
  if (pairs.empty()) throw InputError("seg_acc: no transcript pairs");
  std::size_t match = 0;
  for (const auto& [ref, hyp] : pairs)
    if (sot_segment_count(ref) == sot_segment_count(hyp)) ++match;
  return 100.0 * static_cast<double>(match) / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------
// DER
// ---------------------------------------------------------------------------

struct DiarSegment {
  std::string speaker;
  double onset_s = 0.0;
  double offset_s = 0.0;
};

struct DiarTimeline {
  std::vector<DiarSegment> segments;  // may overlap, any order

  void validate() const {
    for (const auto& s : segments)
      if (!(s.offset_s > s.onset_s))
        throw InputError("DiarTimeline: segment for " + s.speaker +
                         " has offset <= onset");
  }
};

/// Parses RTTM `SPEAKER` lines (other record types ignored).
inline DiarTimeline parse_rttm(const std::string& text) {
  DiarTimeline tl;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == ';') continue;
    std::istringstream ls(line);
    std::string type, file, chan, spk, tmp;
    double onset = 0.0, dur = 0.0;
    if (!(ls >> type)) continue;
    if (type != "SPEAKER") continue;
    if (!(ls >> file >> chan >> onset >> dur >> tmp >> tmp >> spk))
      throw InputError("rttm line " + std::to_string(line_no) + ": malformed");
    tl.segments.push_back(DiarSegment{spk, onset, onset + dur});
  }
  tl.validate();
  return tl;
}

struct DerResult {
  double der = 0.0;
  double miss_s = 0.0;
  double falarm_s = 0.0;
  double confusion_s = 0.0;
  double total_ref_s = 0.0;  // scored reference speech time
  std::map<std::string, std::string> mapping;  // ref speaker -> hyp speaker
};

namespace metrics_detail {

using Interval = std::pair<double, double>;

/// Per-speaker union of segments, merged and sorted.
inline std::map<std::string, std::vector<Interval>> merge_by_speaker(
    const DiarTimeline& tl) {
  std::map<std::string, std::vector<Interval>> out;
  for (const auto& s : tl.segments) out[s.speaker].emplace_back(s.onset_s, s.offset_s);
  for (auto& [spk, ivs] : out) {
    std::sort(ivs.begin(), ivs.end());
    std::vector<Interval> merged;
    for (const auto& iv : ivs) {
      if (!merged.empty() && iv.first <= merged.back().second)
        merged.back().second = std::max(merged.back().second, iv.second);
      else
        merged.push_back(iv);
    }
    ivs = std::move(merged);
  }
  return out;
}

inline bool covers(const std::vector<Interval>& ivs, double t) {
  for (const auto& iv : ivs)
    if (t >= iv.first && t < iv.second) return true;
  return false;
}

/// Max-sum assignment on a square cost-to-maximize matrix (Hungarian method
/// with potentials). Returns row assigned to each column, or npos.
inline std::vector<std::size_t> hungarian_max(
    const std::vector<std::vector<double>>& weight) {
  const std::size_t k = weight.size();
  if (k == 0) return {};
  double top = 0.0;
  for (const auto& row : weight)
    for (double w : row) top = std::max(top, w);
  // minimize (top - w): constant offset per cell keeps the argmax.
  const std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<double> u(k + 1, 0.0), v(k + 1, 0.0);
  std::vector<std::size_t> p(k + 1, kNone), way(k + 1, kNone);
  for (std::size_t i = 0; i < k; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(k + 1, std::numeric_limits<double>::infinity());
    std::vector<bool> used(k + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = std::numeric_limits<double>::infinity();
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const double cur = (top - weight[i0][j - 1]) - u[i0 + 1] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= k; ++j) {
        if (used[j]) {
          u[p[j] + 1] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != kNone);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_of_col(k, kNone);
  for (std::size_t j = 1; j <= k; ++j) row_of_col[j - 1] = p[j];
  return row_of_col;
}

}  // namespace metrics_detail

/// Exact DER. Time is cut at every reference/hypothesis/collar boundary; each
/// elementary interval is scored by its active speaker counts:
///   miss      += L * max(0, Nref - Nhyp)
///   falarm    += L * max(0, Nhyp - Nref)
///   confusion += L * (min(Nref, Nhyp) - Ncorrect)
/// where Ncorrect counts reference speakers whose optimally mapped hypothesis
/// speaker is active too. Intervals within +-collar_s of a reference boundary
/// are not scored; with score_overlap off, intervals where the reference has
/// more than one active speaker are not scored either. The speaker mapping
/// maximizes total ref/hyp co-occurrence over scored time.
inline DerResult der(const DiarTimeline& ref, const DiarTimeline& hyp,
                     double collar_s = 0.0, bool score_overlap = true) {
  using namespace metrics_detail;
  ref.validate();
  hyp.validate();
  if (ref.segments.empty()) throw InputError("der: empty reference timeline");
  if (collar_s < 0.0) throw InputError("der: collar must be >= 0");

  const auto ref_by_spk = merge_by_speaker(ref);
  const auto hyp_by_spk = merge_by_speaker(hyp);
  std::vector<std::string> ref_spk, hyp_spk;
  for (const auto& [s, ivs] : ref_by_spk) ref_spk.push_back(s);
  for (const auto& [s, ivs] : hyp_by_spk) hyp_spk.push_back(s);

  std::vector<double> cuts, collar_centers;
  for (const auto& [s, ivs] : ref_by_spk)
    for (const auto& iv : ivs) {
      collar_centers.push_back(iv.first);
      collar_centers.push_back(iv.second);
      for (double b : {iv.first, iv.second}) {
        cuts.push_back(b);
        if (collar_s > 0.0) {
          cuts.push_back(b - collar_s);
          cuts.push_back(b + collar_s);
        }
      }
    }
  for (const auto& [s, ivs] : hyp_by_spk)
    for (const auto& iv : ivs) {
      cuts.push_back(iv.first);
      cuts.push_back(iv.second);
    }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  struct Cell {
    double len = 0.0;
    std::vector<std::size_t> refs, hyps;  // active speaker indexes
  };
  std::vector<Cell> cells;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c], b = cuts[c + 1];
    if (!(b > a)) continue;
    const double mid = a + (b - a) / 2.0;
    bool in_collar = false;
    for (double center : collar_centers)
      if (std::fabs(mid - center) < collar_s) {
        in_collar = true;
        break;
      }
    if (in_collar) continue;
    Cell cell;
    cell.len = b - a;
    for (std::size_t r = 0; r < ref_spk.size(); ++r)
      if (covers(ref_by_spk.at(ref_spk[r]), mid)) cell.refs.push_back(r);
    for (std::size_t h = 0; h < hyp_spk.size(); ++h)
      if (covers(hyp_by_spk.at(hyp_spk[h]), mid)) cell.hyps.push_back(h);
    if (!score_overlap && cell.refs.size() > 1) continue;
    if (cell.refs.empty() && cell.hyps.empty()) continue;
    cells.push_back(std::move(cell));
  }

  const std::size_t k = std::max(ref_spk.size(), hyp_spk.size());
  std::vector<std::vector<double>> overlap(k, std::vector<double>(k, 0.0));
  for (const auto& cell : cells)
    for (std::size_t r : cell.refs)
      for (std::size_t h : cell.hyps) overlap[r][h] += cell.len;
  const std::vector<std::size_t> row_of_col = hungarian_max(overlap);
  std::vector<std::size_t> mapped(ref_spk.size(), static_cast<std::size_t>(-1));
  DerResult res;
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t r = row_of_col[j];
    if (r < ref_spk.size() && j < hyp_spk.size() && overlap[r][j] > 0.0) {
      mapped[r] = j;
      res.mapping[ref_spk[r]] = hyp_spk[j];
    }
  }

  for (const auto& cell : cells) {
    const double nr = static_cast<double>(cell.refs.size());
    const double nh = static_cast<double>(cell.hyps.size());
    res.total_ref_s += cell.len * nr;
    std::size_t correct = 0;
    for (std::size_t r : cell.refs) {
      const std::size_t h = mapped[r];
      if (h != static_cast<std::size_t>(-1) &&
          std::find(cell.hyps.begin(), cell.hyps.end(), h) != cell.hyps.end())
        ++correct;
    }
    res.miss_s += cell.len * std::max(0.0, nr - nh);
    res.falarm_s += cell.len * std::max(0.0, nh - nr);
    res.confusion_s += cell.len * (std::min(nr, nh) - static_cast<double>(correct));
  }
  if (res.total_ref_s <= 0.0)
    throw InputError("der: no scored reference speech (collar removed everything)");
  res.der = (res.miss_s + res.falarm_s + res.confusion_s) / res.total_ref_s;
  return res;
}

}  // namespace convsim

#endif  // CONVSIM_METRICS_HPP_
