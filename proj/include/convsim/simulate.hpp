// convsim/simulate.hpp

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

// Conversation planning and rendering.
//
// A conversation is planned as an ordered turn list: each turn has a speaker
// slot, an utterance drawn without replacement from that speaker's pool
// within the chosen book, and a signed gap to the previous turn (negative =
// overlap). Rendering convolves each utterance with its slot's room impulse
// response, places it at its onset, sums everything into one mixture, and
// optionally adds looped background noise at a sampled SNR.
//
// Everything here is a pure function of (inputs, seed): planning draws from
// an Rng seeded per conversation, and rendering is deterministic, so a batch
// driver can fan conversations out to threads and still get byte-identical
// reruns.

#ifndef CONVSIM_SIMULATE_HPP_
#define CONVSIM_SIMULATE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "convsim/acoustics.hpp"
#include "convsim/audio.hpp"
#include "convsim/corpus.hpp"
#include "convsim/error.hpp"
#include "convsim/rng.hpp"
#include "convsim/stats.hpp"
#include "convsim/turns.hpp"

namespace convsim {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct SimConfig {
  int n_spk = 2;
  int n_utterances_min = 10;  // inclusive range for the turn count draw
  int n_utterances_max = 10;
  int min_utts_per_speaker = 2;  // candidate eligibility threshold
  bool noise_enabled = false;
  double realism_fraction = 0.4;  // share of conversations using realism RIRs
  double min_azimuth_sep_deg = 20.0;
  int sample_rate_hz = 16000;
  std::uint64_t master_seed = 0;

  void validate() const {
    if (n_spk < 1) throw InputError("SimConfig: n_spk must be >= 1");
    if (n_utterances_min < 1 || n_utterances_max < n_utterances_min)
      throw InputError("SimConfig: need 1 <= n_utterances_min <= n_utterances_max");
    if (min_utts_per_speaker < 1)
      throw InputError("SimConfig: min_utts_per_speaker must be >= 1");
    if (realism_fraction < 0.0 || realism_fraction > 1.0)
      throw InputError("SimConfig: realism_fraction must be in [0, 1]");
    if (sample_rate_hz <= 0) throw InputError("SimConfig: sample_rate_hz must be > 0");
  }
};

/// Gap samplers used by the planner. Wrapping the fitted model in plain
/// functions keeps the planner testable with point-mass or otherwise exact
/// distributions that a kernel estimate cannot represent.
struct PauseSamplerSet {
  std::function<double(Rng&)> same_mean;
  std::function<double(Rng&)> diff_mean;
  std::function<double(Rng&)> same_dev;
  std::function<double(Rng&)> diff_dev;

  static PauseSamplerSet from_model(const MeanPauseModel& m) {
    PauseSamplerSet s;
    s.same_mean = [&m](Rng& rng) { return m.same_means.sample(rng); };
    s.diff_mean = [&m](Rng& rng) { return m.diff_means.sample(rng); };
    s.same_dev = [&m](Rng& rng) { return m.same_dev.sample(rng); };
    s.diff_dev = [&m](Rng& rng) { return m.diff_dev.sample(rng); };
    return s;
  }
};

/// Optional per-conversation SNR source; the sampled value applies to the
/// whole mixture. +inf disables noise for that conversation.
using SnrSampler = std::function<double(Rng&)>;

// ---------------------------------------------------------------------------
// Plan types
// ---------------------------------------------------------------------------

struct PlannedTurn {
  int index = 0;  // 0-based position in the conversation
  int speaker_slot = 0;
  std::string utterance_id;
  double gap_s = 0.0;  // sampled signed gap (0 for the first turn)
  double onset_s = 0.0;
  double offset_s = 0.0;
  bool clamped = false;  // true when the monotonicity clamp moved the onset
};

struct ConversationPlan {
  std::string conversation_id;
  std::string book_id;
  std::vector<std::string> speakers;  // slot -> speaker_id
  std::vector<PlannedTurn> turns;
  RirSelection rirs;    // assignments empty when planned without a RIR set
  std::string room_id;  // empty when planned without a RIR set
  std::optional<double> snr_db;
  std::string noise_path;  // empty when noise disabled
  std::uint64_t seed = 0;
  int clamp_count = 0;
  std::vector<std::string> warnings;
};

/// Seed for conversation `index` under `master_seed`; order-independent, so
/// parallel batch rendering reproduces a serial run.
inline std::uint64_t conversation_seed(std::uint64_t master_seed, std::uint64_t index) {
  return master_seed ^ splitmix64(index);
}

inline std::string conversation_id_for(std::uint64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "conv_%06llu",
                static_cast<unsigned long long>(index));
  return buf;
}

// ---------------------------------------------------------------------------
// Planning
// ---------------------------------------------------------------------------

/// Plans one conversation. Fixed draw order (candidate, turn count, speaker
/// permutation, room/mode/RIRs, noise/SNR, then per turn: slot, utterance,
/// gap) so that a given seed always yields the same plan.
///
/// The first turn's speaker is slot 0 by construction (slots are relative to
/// the conversation); the uniform speaker permutation is what realizes the
/// uniform initial-speaker choice. Gaps attribute to the incoming speaker:
/// its first same-speaker (resp. speaker-change) gap draws a base mean from
/// the mean distribution, and every gap adds a fresh deviation draw.
///
/// `onset = max(prev_onset + 0.01, prev_offset + gap)`, floored at 0; the
/// clamp keeps annotations a valid turn sequence under extreme overlap draws
/// and is counted per conversation. A speaker pool running dry ends the plan
/// early with a warning rather than failing the batch.
inline ConversationPlan plan_conversation(
    const Corpus& corpus, const std::vector<SpeakerSetCandidate>& candidates,
    const PauseSamplerSet& pauses, const TurnModel& turn_model,
    const SimConfig& config, std::uint64_t conversation_index,
    const std::vector<RirEntry>& rir_db = {},
    const std::vector<std::string>& noise_paths = {},
    const SnrSampler& snr_sampler = nullptr) {
  config.validate();
  if (candidates.empty())
    throw InfeasibleError("plan_conversation: no eligible speaker set");
  if (turn_model.n_slots() != config.n_spk)
    throw InputError("plan_conversation: turn model has " +
                     std::to_string(turn_model.n_slots()) + " slots, config asks " +
                     std::to_string(config.n_spk) + " speakers");

  ConversationPlan plan;
  plan.seed = conversation_seed(config.master_seed, conversation_index);
  plan.conversation_id = conversation_id_for(conversation_index);
  Rng rng(plan.seed);

  const SpeakerSetCandidate& cand = candidates[rng.next_index(candidates.size())];
  plan.book_id = cand.book_id;

  const int span = config.n_utterances_max - config.n_utterances_min + 1;
  const int n_u = config.n_utterances_min +
                  static_cast<int>(rng.next_index(static_cast<std::size_t>(span)));

  plan.speakers = cand.speakers;  // sorted in the candidate
  for (std::size_t i = plan.speakers.size(); i > 1; --i)
    std::swap(plan.speakers[i - 1], plan.speakers[rng.next_index(i)]);

  if (!rir_db.empty()) {
    const RirMode mode = rng.next_double() < config.realism_fraction
                             ? RirMode::kRealism
                             : RirMode::kUniform;
    const std::vector<std::string> rooms = rooms_with_capacity(rir_db, config.n_spk);
    if (rooms.empty())
      throw InfeasibleError("plan_conversation: no room with " +
                            std::to_string(config.n_spk) + " sources");
    plan.room_id = rooms[rng.next_index(rooms.size())];
    plan.rirs = select_rirs(rir_db, plan.room_id, config.n_spk, mode,
                            config.min_azimuth_sep_deg, rng);
  }

  if (config.noise_enabled && !noise_paths.empty()) {
    plan.noise_path = noise_paths[rng.next_index(noise_paths.size())];
    if (snr_sampler) plan.snr_db = snr_sampler(rng);
  }

  // Per-slot utterance pools within the book, consumed without replacement.
  std::vector<std::vector<std::string>> pools(plan.speakers.size());
  const auto& book = corpus.books().at(plan.book_id);
  for (std::size_t slot = 0; slot < plan.speakers.size(); ++slot)
    pools[slot] = book.at(plan.speakers[slot]);

  std::vector<SpeakerGapState> gap_state(plan.speakers.size());
  std::vector<int> slot_seq;
  const int order = turn_model.order();
  for (int n = 0; n < n_u; ++n) {
    int slot = 0;
    if (n > 0) {
      // History of the last `order` slots, left-padded with slot 0 (= the
      // opening speaker) when the conversation is still shorter than that.
      std::vector<int> history(static_cast<std::size_t>(order), 0);
      for (int k = 0; k < order; ++k) {
        const int pos = n - order + k;
        if (pos >= 0) history[static_cast<std::size_t>(k)] = slot_seq[pos];
      }
      slot = turn_model.sample_next(history, rng);
    }

    auto& pool = pools[static_cast<std::size_t>(slot)];
    if (pool.empty()) {
      plan.warnings.push_back("speaker " + plan.speakers[static_cast<std::size_t>(slot)] +
                              " ran out of utterances at turn " + std::to_string(n) +
                              "; conversation shortened");
      break;
    }
    const std::size_t pick = rng.next_index(pool.size());
    PlannedTurn turn;
    turn.index = n;
    turn.speaker_slot = slot;
    turn.utterance_id = pool[pick];
    pool[pick] = pool.back();
    pool.pop_back();

    const double dur = corpus.utterance(turn.utterance_id).duration_s;
    if (n == 0) {
      turn.gap_s = 0.0;
      turn.onset_s = 0.0;
    } else {
      const bool same = slot == plan.turns.back().speaker_slot;
      SpeakerGapState& st = gap_state[static_cast<std::size_t>(slot)];
      std::optional<double>& mu = same ? st.mu_same : st.mu_diff;
      if (!mu) mu = same ? pauses.same_mean(rng) : pauses.diff_mean(rng);
      const double v = same ? pauses.same_dev(rng) : pauses.diff_dev(rng);
      turn.gap_s = *mu + v;
      const double natural = plan.turns.back().offset_s + turn.gap_s;
      const double floor_s = plan.turns.back().onset_s + 0.01;
      turn.onset_s = std::max(natural, floor_s);
      turn.clamped = natural < floor_s;
      if (turn.onset_s < 0.0) turn.onset_s = 0.0;
      if (turn.clamped) ++plan.clamp_count;
    }
    turn.offset_s = turn.onset_s + dur;
    slot_seq.push_back(slot);
    plan.turns.push_back(std::move(turn));
  }
  return plan;
}

/// Convenience overload: fitted model as-is, candidates computed here.
inline ConversationPlan plan_conversation(const Corpus& corpus,
                                          const MeanPauseModel& pause_model,
                                          const TurnModel& turn_model,
                                          const SimConfig& config,
                                          std::uint64_t conversation_index) {
  const auto candidates =
      eligible_speaker_sets(corpus, config.n_spk, config.min_utts_per_speaker);
  return plan_conversation(corpus, candidates,
                           PauseSamplerSet::from_model(pause_model), turn_model,
                           config, conversation_index);
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

struct TranscriptTurn {
  std::string speaker_id;
  std::string text;
  double onset_s = 0.0;
  double offset_s = 0.0;
};

struct ConversationArtifacts {
  SampleBuffer waveform;
  int sample_rate_hz = 0;
  std::string rttm;
  std::vector<TranscriptTurn> transcript_turns;
  double peak_gain = 1.0;  // applied by the peak guard (1.0 = untouched)
};

/// One `SPEAKER` line per turn, onset-sorted; times in annotations are the
/// dry utterance extents (reverberant tails are not speech activity).
inline std::string emit_rttm(const ConversationPlan& plan) {
  std::vector<const PlannedTurn*> order;
  for (const auto& t : plan.turns) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(),
                   [](const PlannedTurn* a, const PlannedTurn* b) {
                     return a->onset_s < b->onset_s;
                   });
  std::string out;
  char line[256];
  for (const PlannedTurn* t : order) {
    std::snprintf(line, sizeof(line),
                  "SPEAKER %s 1 %.3f %.3f <NA> <NA> %s <NA> <NA>\n",
                  plan.conversation_id.c_str(), t->onset_s,
                  t->offset_s - t->onset_s,
                  plan.speakers[static_cast<std::size_t>(t->speaker_slot)].c_str());
    out += line;
  }
  return out;
}

/// Loads a WAV, checked against the expected rate and (within 1 ms) the
/// manifest duration.
using AudioLoader = std::function<WavData(const std::string& path)>;

inline WavData default_audio_loader(const std::string& path) { return read_wav(path); }

/// Renders the plan into a single mixture. Each utterance is convolved with
/// its slot's RIR (or used dry when the plan has no assignments) and added at
/// round(onset * rate). The waveform extends to the last reverberant tail;
/// annotations keep the dry extents. Noise, when configured, is looped to the
/// full span and mixed at the plan's SNR before the peak guard.
inline ConversationArtifacts render_conversation(
    const ConversationPlan& plan, const Corpus& corpus,
    const AudioLoader& load = default_audio_loader, int sample_rate_hz = 16000) {
  ConversationArtifacts art;
  art.sample_rate_hz = sample_rate_hz;
  art.rttm = emit_rttm(plan);

  std::map<std::string, SampleBuffer> irs;  // slot RIRs, loaded once
  for (const auto& a : plan.rirs.assignments) {
    if (irs.count(a.entry.ir_path)) continue;
    const WavData w = load(a.entry.ir_path);
    if (w.sample_rate_hz != sample_rate_hz)
      throw InputError("RIR " + a.entry.ir_path + " is " +
                       std::to_string(w.sample_rate_hz) + " Hz, pipeline wants " +
                       std::to_string(sample_rate_hz));
    irs[a.entry.ir_path] = w.samples;
  }
  std::vector<const SampleBuffer*> slot_ir(plan.speakers.size(), nullptr);
  for (const auto& a : plan.rirs.assignments)
    slot_ir[static_cast<std::size_t>(a.speaker_slot)] = &irs[a.entry.ir_path];

  const double rate = static_cast<double>(sample_rate_hz);
  for (const auto& t : plan.turns) {
    const Utterance& u = corpus.utterance(t.utterance_id);
    WavData w = load(u.audio_path);
    if (w.sample_rate_hz != sample_rate_hz)
      throw InputError("utterance " + u.id + " audio is " +
                       std::to_string(w.sample_rate_hz) + " Hz, pipeline wants " +
                       std::to_string(sample_rate_hz));
    const double file_dur = static_cast<double>(w.samples.size()) / rate;
    if (std::fabs(file_dur - u.duration_s) > 1e-3)
      throw InputError("utterance " + u.id + " audio is " + std::to_string(file_dur) +
                       " s, manifest says " + std::to_string(u.duration_s));
    const SampleBuffer* ir = slot_ir[static_cast<std::size_t>(t.speaker_slot)];
    SampleBuffer y = ir && !ir->empty() ? convolve(w.samples, *ir) : std::move(w.samples);
    const std::size_t onset = static_cast<std::size_t>(std::llround(t.onset_s * rate));
    // Sized by what actually lands, so a file/manifest duration mismatch
    // inside the 1 ms tolerance can never write past the end.
    if (onset + y.size() > art.waveform.size())
      art.waveform.resize(onset + y.size(), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) art.waveform[onset + i] += y[i];

    TranscriptTurn tt;
    tt.speaker_id = plan.speakers[static_cast<std::size_t>(t.speaker_slot)];
    tt.text = u.transcript;
    tt.onset_s = t.onset_s;
    tt.offset_s = t.offset_s;
    art.transcript_turns.push_back(std::move(tt));
  }
  std::stable_sort(art.transcript_turns.begin(), art.transcript_turns.end(),
                   [](const TranscriptTurn& a, const TranscriptTurn& b) {
                     return a.onset_s < b.onset_s;
                   });

  if (!plan.noise_path.empty() && plan.snr_db &&
      !std::isinf(*plan.snr_db) && !art.waveform.empty()) {
    const WavData nz = load(plan.noise_path);
    if (nz.sample_rate_hz != sample_rate_hz)
      throw InputError("noise " + plan.noise_path + " is " +
                       std::to_string(nz.sample_rate_hz) + " Hz, pipeline wants " +
                       std::to_string(sample_rate_hz));
    const SampleBuffer looped =
        loop_to_length(nz.samples, art.waveform.size(), sample_rate_hz);
    art.waveform = mix_noise(art.waveform, looped, *plan.snr_db);
  }
  art.peak_gain = peak_guard(art.waveform);
  return art;
}

}  // namespace convsim

#endif  // CONVSIM_SIMULATE_HPP_
