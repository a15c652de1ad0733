// convsim/corpus.hpp

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

// Utterance corpus: manifest ingestion, duration filtering, and the
// speaker/book indexes that conversation planning draws from. A corpus is
// immutable after construction and safe to share across worker threads.

#ifndef CONVSIM_CORPUS_HPP_
#define CONVSIM_CORPUS_HPP_

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "convsim/error.hpp"
#include "convsim/jsonl.hpp"

namespace convsim {

struct Utterance {
  std::string id;
  std::string speaker_id;
  std::string book_id;
  double duration_s = 0.0;
  std::string transcript;
  std::string audio_path;
  int sample_rate_hz = 0;
};

/// speaker_id -> utterance ids, in manifest order.
using SpeakerIndex = std::map<std::string, std::vector<std::string>>;
/// book_id -> speaker_id -> utterance ids in that book, in manifest order.
using BookIndex = std::map<std::string, std::map<std::string, std::vector<std::string>>>;

class Corpus {
 public:
  Corpus() = default;

  /// Validates id uniqueness and per-utterance invariants, then builds the
  /// indexes. Audio files are referenced, never opened here.
  static Corpus from_utterances(std::vector<Utterance> utts) {
    Corpus c;
    c.utterances_ = std::move(utts);
    c.rebuild_indexes();
    return c;
  }

  const std::vector<Utterance>& utterances() const { return utterances_; }
  const SpeakerIndex& speakers() const { return speakers_; }
  const BookIndex& books() const { return books_; }

  bool has_utterance(const std::string& id) const { return by_id_.count(id) != 0; }

  const Utterance& utterance(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) throw Error("unknown utterance id " + id);
    return utterances_[it->second];
  }

  std::size_t size() const { return utterances_.size(); }

 private:
  void rebuild_indexes() {
    by_id_.clear();
    speakers_.clear();
    books_.clear();
    for (std::size_t i = 0; i < utterances_.size(); ++i) {
      const Utterance& u = utterances_[i];
      if (!by_id_.emplace(u.id, i).second)
        throw InputError("duplicate utterance id " + u.id);
      speakers_[u.speaker_id].push_back(u.id);
      books_[u.book_id][u.speaker_id].push_back(u.id);
    }
  }

  std::vector<Utterance> utterances_;
  std::unordered_map<std::string, std::size_t> by_id_;
  SpeakerIndex speakers_;
  BookIndex books_;
};

namespace corpus_detail {

inline std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace corpus_detail

/// Reads an utterance manifest (one JSON record per line, fields: id,
/// speaker_id, book_id, duration_s, transcript, audio_path, sample_rate_hz).
inline Corpus load_manifest(const std::string& path) {
  std::vector<Utterance> utts;
  std::unordered_map<std::string, int> seen_lines;
  for_each_jsonl(path, [&](const Json& rec, int line_no) {
    const std::string ctx = path + ":" + std::to_string(line_no);
    Utterance u;
    u.id = field_str(rec, "id", ctx);
    u.speaker_id = field_str(rec, "speaker_id", ctx);
    u.book_id = field_str(rec, "book_id", ctx);
    u.duration_s = field_num(rec, "duration_s", ctx);
    u.transcript = field_str(rec, "transcript", ctx);
    u.audio_path = field_str(rec, "audio_path", ctx);
    u.sample_rate_hz = static_cast<int>(field_int(rec, "sample_rate_hz", ctx));
    if (u.duration_s <= 0.0) throw InputError(ctx + ": duration_s must be > 0");
    if (u.sample_rate_hz <= 0) throw InputError(ctx + ": sample_rate_hz must be > 0");
    if (corpus_detail::trim_copy(u.transcript).empty())
      throw InputError(ctx + ": transcript is empty");
    auto ins = seen_lines.emplace(u.id, line_no);
    if (!ins.second)
      throw InputError(ctx + ": duplicate utterance id '" + u.id +
                       "' (first seen on line " + std::to_string(ins.first->second) + ")");
    utts.push_back(std::move(u));
  });
  return Corpus::from_utterances(std::move(utts));
}

/// Keeps utterances with min_s <= duration_s <= max_s (both ends inclusive).
/// Returns a new corpus with indexes rebuilt; the input is untouched.
inline Corpus filter_by_duration(const Corpus& corpus, double min_s, double max_s) {
  if (!(min_s > 0.0) || !(min_s < max_s))
    throw InputError("invalid duration bounds: need 0 < min < max, got [" +
                     std::to_string(min_s) + ", " + std::to_string(max_s) + "]");
  std::vector<Utterance> kept;
  for (const Utterance& u : corpus.utterances())
    if (u.duration_s >= min_s && u.duration_s <= max_s) kept.push_back(u);
  return Corpus::from_utterances(std::move(kept));
}

/// One candidate speaker set for a conversation: n_spk distinct speakers that
/// all read the same book, each with enough utterances in it.
struct SpeakerSetCandidate {
  std::string book_id;
  std::vector<std::string> speakers;  // sorted
};

/// Enumerates all candidates, sorted by book_id then by speaker tuple.
/// A speaker appearing in several books qualifies under each independently.
inline std::vector<SpeakerSetCandidate> eligible_speaker_sets(
    const Corpus& corpus, int n_spk, int min_utts_per_speaker) {
  if (n_spk < 2) throw InputError("eligible_speaker_sets: n_spk must be >= 2");
  std::vector<SpeakerSetCandidate> out;
  for (const auto& [book_id, by_speaker] : corpus.books()) {
    std::vector<std::string> qualifying;
    for (const auto& [spk, ids] : by_speaker)
      if (static_cast<int>(ids.size()) >= min_utts_per_speaker)
        qualifying.push_back(spk);  // map order, already sorted
    const int k = static_cast<int>(qualifying.size());
    if (k < n_spk) continue;
    // enumerate size-n_spk combinations in lexicographic order
    std::vector<int> idx(n_spk);
    for (int i = 0; i < n_spk; ++i) idx[i] = i;
    while (true) {
      SpeakerSetCandidate cand;
      cand.book_id = book_id;
      for (int i : idx) cand.speakers.push_back(qualifying[i]);
      out.push_back(std::move(cand));
      int i = n_spk - 1;
      while (i >= 0 && idx[i] == k - n_spk + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < n_spk; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return out;
}

}  // namespace convsim

#endif  // CONVSIM_CORPUS_HPP_
