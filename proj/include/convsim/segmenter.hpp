// convsim/segmenter.hpp

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

// Clip segmentation and speaker-change transcript serialization.
//
// Conversations are cut into clips of at most max_dur_s (default 30 s) for
// training: turns are packed greedily in onset order, inter-clip silence is
// dropped (each clip restarts its clock at its first turn's onset), and each
// clip's transcript is serialized as one stream with `<sc>` marking speaker
// changes.

#ifndef CONVSIM_SEGMENTER_HPP_
#define CONVSIM_SEGMENTER_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "convsim/audio.hpp"
#include "convsim/error.hpp"
#include "convsim/jsonl.hpp"
#include "convsim/simulate.hpp"

namespace convsim {

struct ClipTurn {
  std::string speaker_id;
  std::string text;
  double rel_onset_s = 0.0;  // relative to the clip's absolute onset
  double rel_offset_s = 0.0;
  double abs_onset_s = 0.0;  // original conversation timeline
  double abs_offset_s = 0.0;
};

struct Clip {
  std::string clip_id;
  std::string conversation_id;
  double abs_onset_s = 0.0;
  double abs_offset_s = 0.0;
  std::vector<ClipTurn> turns;  // onset-sorted
};

/// Greedy packing. A clip opens at its first turn's onset; a turn joins while
/// its offset stays within max_dur_s of that onset, otherwise it opens the
/// next clip. Every turn lands in exactly one clip. The clip's span closes at
/// the latest turn offset it holds (under overlap that can be an earlier
/// turn's tail, not the last turn's).
inline std::vector<Clip> segment_conversation(const std::string& conversation_id,
                                              const std::vector<TranscriptTurn>& turns,
                                              double max_dur_s = 30.0) {
  if (!(max_dur_s > 0.0))
    throw InputError("segment_conversation: max_dur_s must be > 0");
  for (std::size_t i = 1; i < turns.size(); ++i)
    if (turns[i].onset_s < turns[i - 1].onset_s)
      throw InputError("segment_conversation: turns not onset-sorted");

  std::vector<Clip> clips;
  for (const auto& t : turns) {
    if (t.offset_s - t.onset_s > max_dur_s)
      throw InputError("segment_conversation: turn of " +
                       std::to_string(t.offset_s - t.onset_s) +
                       " s cannot fit a " + std::to_string(max_dur_s) + " s clip");
    if (clips.empty() || t.offset_s - clips.back().abs_onset_s > max_dur_s) {
      Clip clip;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "_clip%03zu", clips.size());
      clip.clip_id = conversation_id + buf;
      clip.conversation_id = conversation_id;
      clip.abs_onset_s = t.onset_s;
      clip.abs_offset_s = t.offset_s;
      clips.push_back(std::move(clip));
    }
    Clip& clip = clips.back();
    ClipTurn ct;
    ct.speaker_id = t.speaker_id;
    ct.text = t.text;
    ct.abs_onset_s = t.onset_s;
    ct.abs_offset_s = t.offset_s;
    ct.rel_onset_s = t.onset_s - clip.abs_onset_s;
    ct.rel_offset_s = t.offset_s - clip.abs_onset_s;
    clip.abs_offset_s = std::max(clip.abs_offset_s, t.offset_s);
    clip.turns.push_back(std::move(ct));
  }
  return clips;
}

/// Turn texts joined in onset order with ` <sc> ` between consecutive turns
/// of different speakers; consecutive same-speaker turns joined by a single
/// space, no token. Utterances are never split.
inline std::string format_sot(const Clip& clip) {
  if (clip.turns.empty()) throw InputError("format_sot: clip has no turns");
  std::string out = clip.turns.front().text;
  for (std::size_t i = 1; i < clip.turns.size(); ++i) {
    out += clip.turns[i].speaker_id == clip.turns[i - 1].speaker_id ? " " : " <sc> ";
    out += clip.turns[i].text;
  }
  return out;
}

/// Number of `<sc>`-separated segments the clip serializes to: one more than
/// the count of speaker changes between consecutive turns.
inline int clip_segment_count(const Clip& clip) {
  int n = 1;
  for (std::size_t i = 1; i < clip.turns.size(); ++i)
    if (clip.turns[i].speaker_id != clip.turns[i - 1].speaker_id) ++n;
  return n;
}

/// Cuts the clip's span out of the rendered conversation, so clip acoustics
/// are bit-identical to the same span of the full mixture.
inline SampleBuffer cut_clip_audio(const SampleBuffer& waveform, int sample_rate_hz,
                                   const Clip& clip) {
  const double rate = static_cast<double>(sample_rate_hz);
  std::size_t a = static_cast<std::size_t>(std::llround(clip.abs_onset_s * rate));
  std::size_t b = static_cast<std::size_t>(std::llround(clip.abs_offset_s * rate));
  a = std::min(a, waveform.size());
  b = std::min(std::max(b, a), waveform.size());
  return SampleBuffer(waveform.begin() + static_cast<std::ptrdiff_t>(a),
                      waveform.begin() + static_cast<std::ptrdiff_t>(b));
}

/// One JSON record per clip: ids, audio path, span, the SOT transcript, its
/// segment count, and per-turn absolute + relative times.
inline std::string emit_clip_manifest(
    const std::vector<Clip>& clips,
    const std::function<std::string(const Clip&)>& audio_path) {
  std::string out;
  for (const auto& clip : clips) {
    Json rec;
    rec["clip_id"] = clip.clip_id;
    rec["conversation_id"] = clip.conversation_id;
    rec["audio_path"] = audio_path(clip);
    rec["abs_onset_s"] = clip.abs_onset_s;
    rec["abs_offset_s"] = clip.abs_offset_s;
    rec["transcript_sot"] = format_sot(clip);
    rec["n_segments"] = clip_segment_count(clip);
    Json turns = Json::array();
    for (const auto& t : clip.turns) {
      Json jt;
      jt["speaker_id"] = t.speaker_id;
      jt["abs_onset_s"] = t.abs_onset_s;
      jt["abs_offset_s"] = t.abs_offset_s;
      jt["rel_onset_s"] = t.rel_onset_s;
      jt["rel_offset_s"] = t.rel_offset_s;
      turns.push_back(std::move(jt));
    }
    rec["turns"] = std::move(turns);
    out += rec.dump();
    out += "\n";
  }
  return out;
}

}  // namespace convsim

#endif  // CONVSIM_SEGMENTER_HPP_
