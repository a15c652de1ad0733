// tests/acceptance_main.cpp

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

// Release gate: twelve end-to-end behavioral checks, one PASS/FAIL line each.
// Runs standalone (no test framework) so the output can be pasted straight
// into a release note; the process exits nonzero if any line fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "convsim/pipeline.hpp"
#include "test_util.hpp"

namespace {

using convsim::Rng;

// Fails the enclosing criterion with a detail message.
#define EXPECT(cond, detail)        \
  do {                              \
    if (!(cond)) {                  \
      why = (detail);               \
      return false;                 \
    }                               \
  } while (0)

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// In-memory corpus: two speakers sharing one book, `per_speaker` utterances
// each, all `dur_s` long. Audio paths are placeholders; planning never opens
// them.
convsim::Corpus two_speaker_corpus(int per_speaker, double dur_s) {
  std::vector<convsim::Utterance> utts;
  for (const char* spk : {"spk_a", "spk_b"}) {
    for (int i = 0; i < per_speaker; ++i) {
      convsim::Utterance u;
      u.id = std::string(spk) + "_u" + std::to_string(i);
      u.speaker_id = spk;
      u.book_id = "bk";
      u.duration_s = dur_s;
      u.transcript = "placeholder words";
      u.audio_path = "unused.wav";
      u.sample_rate_hz = 16000;
      utts.push_back(std::move(u));
    }
  }
  return convsim::Corpus::from_utterances(std::move(utts));
}

std::vector<convsim::SpeakerSetCandidate> one_candidate() {
  return {convsim::SpeakerSetCandidate{"bk", {"spk_a", "spk_b"}}};
}

convsim::PauseSamplerSet point_mass_pauses(double same_s, double diff_s) {
  convsim::PauseSamplerSet p;
  p.same_mean = [same_s](Rng&) { return same_s; };
  p.diff_mean = [diff_s](Rng&) { return diff_s; };
  p.same_dev = [](Rng&) { return 0.0; };
  p.diff_dev = [](Rng&) { return 0.0; };
  return p;
}

std::string random_words(Rng& rng, int n, bool with_sc) {
  static const char* kVocab[] = {"alpha", "bravo", "charlie", "delta", "echo"};
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i > 0) out += (with_sc && rng.next_double() < 0.2) ? " <sc> " : " ";
    out += kVocab[rng.next_index(5)];
  }
  return out;
}

convsim::DiarTimeline timeline(std::vector<convsim::DiarSegment> segs) {
  convsim::DiarTimeline tl;
  tl.segments = std::move(segs);
  return tl;
}

// Random diarization timeline whose boundaries all sit on a 10 ms grid, so a
// 1 ms frame oracle can never disagree through quantization alone.
convsim::DiarTimeline random_timeline(Rng& rng, int n_segs, int n_speakers,
                                      const std::string& prefix) {
  convsim::DiarTimeline tl;
  double clock = 0.0;
  for (int i = 0; i < n_segs; ++i) {
    clock += static_cast<double>(rng.next_index(121)) / 100.0;
    const double dur = 0.2 + static_cast<double>(rng.next_index(181)) / 100.0;
    const std::string spk =
        prefix + std::to_string(rng.next_index(static_cast<std::size_t>(n_speakers)));
    tl.segments.push_back(convsim::DiarSegment{spk, clock, clock + dur});
    if (rng.next_double() < 0.5) clock += dur;  // otherwise the next one overlaps
  }
  return tl;
}

// ---------------------------------------------------------------------------
// The criteria
// ---------------------------------------------------------------------------

// [1] With point-mass pauses and a deterministic alternating turn model the
// planner collapses to a closed-form schedule.
bool crit_deterministic_plan(std::string& why) {
  const auto t0 = std::chrono::steady_clock::now();
  const convsim::Corpus corpus = two_speaker_corpus(3, 2.0);
  const convsim::TurnModel alternate(1, 2, {{0.0, 1.0}, {1.0, 0.0}});
  convsim::SimConfig sim;
  sim.n_utterances_min = 3;
  sim.n_utterances_max = 3;
  const convsim::ConversationPlan plan = convsim::plan_conversation(
      corpus, one_candidate(), point_mass_pauses(0.5, 0.2), alternate, sim, 0);

  EXPECT(plan.turns.size() == 3,
         "expected 3 turns, got " + std::to_string(plan.turns.size()));
  const int want_slot[3] = {0, 1, 0};
  const double want_onset[3] = {0.0, 2.2, 4.4};
  for (int i = 0; i < 3; ++i) {
    EXPECT(plan.turns[i].speaker_slot == want_slot[i],
           "turn " + std::to_string(i) + " landed on slot " +
               std::to_string(plan.turns[i].speaker_slot));
    EXPECT(std::fabs(plan.turns[i].onset_s - want_onset[i]) <= 1e-12,
           "turn " + std::to_string(i) + " onset " + fmt(plan.turns[i].onset_s) +
               ", want " + fmt(want_onset[i]));
    EXPECT(std::fabs(plan.turns[i].offset_s - plan.turns[i].onset_s - 2.0) <= 1e-12,
           "turn duration drifted from the utterance duration");
  }
  EXPECT(plan.turns[1].gap_s == 0.2 && plan.turns[2].gap_s == 0.2,
         "speaker-change gaps should be exactly the 0.2 point mass");
  EXPECT(plan.clamp_count == 0, "nothing should clamp on an all-positive schedule");
  const double dt = elapsed_s(t0);
  EXPECT(dt < 1.0, "took " + fmt(dt) + " s");
  return true;
}

// [2] Gaps sampled through the full stats-document round trip follow the
// composed mean+deviation distribution: KS distance < 0.08 and the share of
// overlapped starts (negative gaps) within 3 points of the closed form.
bool crit_gap_distribution(std::string& why) {
  const auto t0 = std::chrono::steady_clock::now();
  const convsim::GapKde mean_kde({0.1, 0.3, 0.6}, 0.05);
  const convsim::GapKde dev_kde({-0.2, 0.0, 0.2}, 0.08);
  const convsim::StatsDoc doc{
      true, 2.0, 0.5,
      convsim::MeanPauseModel{mean_kde, mean_kde, dev_kde, dev_kde},
      convsim::TurnModel(1, 2, {{0.5, 0.5}, {0.5, 0.5}}),
      0.0, 0, 0};
  // Serialize and reload so the samples go through the same path generation
  // uses when it reads a fitted document off disk.
  const convsim::StatsDoc loaded =
      convsim::stats_doc_from_json(convsim::stats_doc_to_json(doc));
  const convsim::PauseSamplerSet pauses =
      convsim::PauseSamplerSet::from_model(loaded.pauses);

  const convsim::Corpus corpus = two_speaker_corpus(12, 2.0);
  convsim::SimConfig sim;
  sim.n_utterances_min = 12;
  sim.n_utterances_max = 12;
  sim.master_seed = 20260817;

  std::vector<double> gaps;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto plan = convsim::plan_conversation(corpus, one_candidate(), pauses,
                                                 loaded.turn_model, sim, i);
    for (const auto& t : plan.turns)
      if (t.index > 0) gaps.push_back(t.gap_s);
  }
  EXPECT(gaps.size() >= 2000,
         "only " + std::to_string(gaps.size()) + " gaps collected");

  // Same- and changed-speaker models are identical here, so one composed cdf
  // covers the pooled sample.
  const testutil::ComposedGapDist composed(loaded.pauses.same_means,
                                           loaded.pauses.same_dev);
  const double ks =
      testutil::ks_statistic(gaps, [&](double x) { return composed.cdf(x); });
  EXPECT(ks < 0.08, "KS distance " + fmt(ks));

  std::size_t n_neg = 0;
  for (double g : gaps)
    if (g < 0.0) ++n_neg;
  const double overlap_share =
      static_cast<double>(n_neg) / static_cast<double>(gaps.size());
  EXPECT(std::fabs(overlap_share - composed.p_overlap()) <= 0.03,
         "overlap share " + fmt(overlap_share) + " vs expected " +
             fmt(composed.p_overlap()));
  const double dt = elapsed_s(t0);
  EXPECT(dt < 60.0, "took " + fmt(dt) + " s");
  return true;
}

// [3] Planned slot sequences reproduce the Markov transition matrix within
// 0.05 per cell.
bool crit_turn_taking(std::string& why) {
  const convsim::TurnModel model(1, 2, {{0.3, 0.7}, {0.6, 0.4}});
  const convsim::Corpus corpus = two_speaker_corpus(12, 2.0);
  convsim::SimConfig sim;
  sim.n_utterances_min = 12;
  sim.n_utterances_max = 12;
  sim.master_seed = 31;

  long long counts[2][2] = {{0, 0}, {0, 0}};
  for (std::uint64_t i = 0; i < 400; ++i) {
    const auto plan =
        convsim::plan_conversation(corpus, one_candidate(),
                                   point_mass_pauses(0.3, 0.3), model, sim, i);
    EXPECT(plan.turns.size() == 12, "a plan ended early");
    for (std::size_t k = 1; k < plan.turns.size(); ++k)
      ++counts[plan.turns[k - 1].speaker_slot][plan.turns[k].speaker_slot];
  }
  long long total = 0;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) total += counts[r][c];
  EXPECT(total >= 2000, "only " + std::to_string(total) + " transitions");

  for (int r = 0; r < 2; ++r) {
    const long long row_n = counts[r][0] + counts[r][1];
    EXPECT(row_n > 0, "slot " + std::to_string(r) + " never spoke");
    for (int c = 0; c < 2; ++c) {
      const double got =
          static_cast<double>(counts[r][c]) / static_cast<double>(row_n);
      const double want = model.probability({r}, c);
      EXPECT(std::fabs(got - want) <= 0.05,
             "P(" + std::to_string(c) + "|" + std::to_string(r) + ") = " +
                 fmt(got) + ", model says " + fmt(want));
    }
  }
  return true;
}

// [4] Serialized-transcript formatting: same-speaker turns join with a space,
// speaker changes insert the <sc> tag, byte for byte.
bool crit_sot_format(std::string& why) {
  const std::vector<convsim::TranscriptTurn> turns = {
      {"spk_a", "How are you?", 0.0, 1.0},
      {"spk_b", "I'm fine, thanks", 1.2, 2.2},
      {"spk_a", "good", 2.4, 3.0},
  };
  const auto clips = convsim::segment_conversation("conv_x", turns, 30.0);
  EXPECT(clips.size() == 1, "expected a single clip under a 30 s cap");
  const std::string sot = convsim::format_sot(clips[0]);
  const std::string want = "How are you? <sc> I'm fine, thanks <sc> good";
  EXPECT(sot == want, "got \"" + sot + "\"");
  EXPECT(convsim::clip_segment_count(clips[0]) == 3, "segment count != 3");
  EXPECT(convsim::sot_segment_count(sot) == 3, "recount from the text != 3");
  return true;
}

// [5] Speaker-order-tolerant WER: never above plain WER, zero on a pure
// segment swap, and equal to a factorial brute force on small inputs.
bool crit_cpwer(std::string& why) {
  {
    const auto swapped = convsim::cpwer("a b <sc> c d", "c d <sc> a b");
    EXPECT(swapped.rate == 0.0, "a pure segment swap should score 0");
    EXPECT(!swapped.approximate, "two segments must be scored exhaustively");
    EXPECT(convsim::wer("a b <sc> c d", "c d <sc> a b").rate == 1.0,
           "the order-sensitive rate should be 1.0 on the swap");
  }

  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::string ref =
        random_words(rng, 1 + static_cast<int>(rng.next_index(12)), true);
    const std::string hyp =
        random_words(rng, 1 + static_cast<int>(rng.next_index(12)), true);
    EXPECT(convsim::cpwer(ref, hyp).rate <= convsim::wer(ref, hyp).rate + 1e-12,
           "reordering made things worse on \"" + ref + "\" vs \"" + hyp + "\"");
  }

  Rng rng2(2025);
  int checked = 0;
  while (checked < 60) {
    const std::string ref =
        random_words(rng2, 1 + static_cast<int>(rng2.next_index(10)), true);
    const std::string hyp =
        random_words(rng2, 1 + static_cast<int>(rng2.next_index(10)), true);
    const std::vector<std::string> segs = convsim::split_sot_segments(hyp);
    if (segs.size() > 5) continue;
    ++checked;

    std::vector<std::size_t> order(segs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    double best = std::numeric_limits<double>::infinity();
    do {
      std::string joined;
      for (std::size_t i : order) {
        if (!joined.empty()) joined += ' ';
        joined += segs[i];
      }
      best = std::min(best, convsim::wer(ref, joined).rate);
    } while (std::next_permutation(order.begin(), order.end()));

    const auto got = convsim::cpwer(ref, hyp);
    EXPECT(std::fabs(got.rate - best) <= 1e-12,
           "exhaustive search disagrees on \"" + ref + "\" vs \"" + hyp + "\"");
    EXPECT(!got.approximate, "a small input was flagged approximate");
  }
  return true;
}

// [6] Diarization error: boundary-sweep scoring matches a 1 ms frame oracle,
// is invariant under hypothesis relabeling, and hits textbook fixtures.
bool crit_der(std::string& why) {
  {
    const auto miss = convsim::der(timeline({{"A", 0.0, 10.0}}),
                                   timeline({{"A", 0.0, 8.0}}));
    EXPECT(std::fabs(miss.der - 0.2) <= 1e-12,
           "2 s missed out of 10 should score 0.2, got " + fmt(miss.der));
    const auto fa = convsim::der(timeline({{"A", 0.0, 10.0}}),
                                 timeline({{"A", 0.0, 10.0}, {"B", 0.0, 10.0}}));
    EXPECT(std::fabs(fa.der - 1.0) <= 1e-12,
           "a spurious full-length speaker should score 1.0, got " + fmt(fa.der));
  }

  Rng rng(808);
  int scored = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto ref = random_timeline(rng, 2 + static_cast<int>(rng.next_index(5)), 3, "r");
    const auto hyp = random_timeline(rng, 1 + static_cast<int>(rng.next_index(6)), 3, "h");
    const double collar = (trial % 3 == 0) ? 0.05 : 0.0;
    const bool overlap = (trial % 2 == 0);
    convsim::DerResult got;
    try {
      got = convsim::der(ref, hyp, collar, overlap);
    } catch (const convsim::InputError&) {
      continue;  // e.g. the collar or overlap exclusion removed all ref speech
    }
    const auto oracle = testutil::frame_der(ref, hyp, collar, overlap);
    EXPECT(std::fabs(got.der - oracle.der) < 0.001,
           "trial " + std::to_string(trial) + ": sweep " + fmt(got.der) +
               " vs frame oracle " + fmt(oracle.der));
    ++scored;
  }
  EXPECT(scored >= 80, "too few scorable random timelines");

  Rng rng2(909);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ref = random_timeline(rng2, 6, 3, "r");
    const auto hyp = random_timeline(rng2, 6, 3, "h");
    convsim::DiarTimeline renamed = hyp;
    for (auto& s : renamed.segments) s.speaker = "spk_" + s.speaker;
    const auto a = convsim::der(ref, hyp);
    const auto b = convsim::der(ref, renamed);
    EXPECT(a.der == b.der && a.miss_s == b.miss_s && a.falarm_s == b.falarm_s &&
               a.confusion_s == b.confusion_s,
           "relabeling the hypothesis changed the score on trial " +
               std::to_string(trial));
  }
  return true;
}

// [7] Split assignment keeps every speaker inside one split (checked through
// the independent verifier) and lands within 5 points of the 80/10/10 targets
// across 20 shuffle seeds.
bool crit_splits(std::string& why) {
  std::vector<convsim::ConversationInfo> conversations;
  Rng rng(99);
  for (int f = 0; f < 50; ++f) {
    const std::string fa = "fam" + std::to_string(f) + "_a";
    const std::string fb = "fam" + std::to_string(f) + "_b";
    const std::string base = "fam" + std::to_string(f) + "_c";
    const double total = 1800.0 + 5400.0 * rng.next_double();
    conversations.push_back({base + "0", {fa}, 0.3 * total});
    conversations.push_back({base + "1", {fa, fb}, 0.5 * total});
    conversations.push_back({base + "2", {fb}, 0.2 * total});
  }
  const auto components = convsim::build_components(conversations);
  EXPECT(components.size() == 50,
         "expected 50 speaker families, got " + std::to_string(components.size()));

  const std::array<double, 3> ratios{0.8, 0.1, 0.1};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng split_rng(seed);
    const auto assignment = convsim::assign_splits(components, ratios, split_rng);
    const auto report = convsim::verify_disjoint(assignment, conversations, ratios);
    EXPECT(report.violations.empty(),
           "seed " + std::to_string(seed) + ": a speaker crossed splits");
    for (std::size_t s = 0; s < 3; ++s)
      EXPECT(std::fabs(report.ratio_deltas[s]) <= 0.05,
             "seed " + std::to_string(seed) + ": split " + std::to_string(s) +
                 " off target by " + fmt(report.ratio_deltas[s]));
  }
  return true;
}

// [8] Room acoustics: fast convolution matches the O(n*m) definition, noise
// mixing hits the requested SNR to 0.01 dB, the position score is zero at the
// reference talking position, and greedy source picking stays within 1.25x of
// the exhaustive optimum.
bool crit_acoustics(std::string& why) {
  {
    const auto x = testutil::make_noise(0.625, 16000, 0.5, 3);  // 10k samples
    const auto h = testutil::make_rir(2000, 0.5, 17);
    const auto fast = convsim::convolve(x, h);
    const auto slow = testutil::direct_convolve(x, h);
    EXPECT(fast.size() == slow.size(), "convolution length mismatch");
    double max_diff = 0.0;
    for (std::size_t i = 0; i < fast.size(); ++i)
      max_diff = std::max(max_diff, std::fabs(fast[i] - slow[i]));
    EXPECT(max_diff <= 1e-6, "max deviation " + fmt(max_diff));
  }

  {
    const auto sig = testutil::make_sine(1.0, 16000, 440.0, 0.1);
    const auto noise = testutil::make_noise(1.0, 16000, 0.3, 5);
    for (double snr : {0.0, 7.5, 30.0}) {
      const auto mixed = convsim::mix_noise(sig, noise, snr);
      double es = 0.0, er = 0.0;
      for (std::size_t i = 0; i < sig.size(); ++i) {
        es += sig[i] * sig[i];
        const double r = mixed[i] - sig[i];
        er += r * r;
      }
      const double measured = 10.0 * std::log10(es / er);
      EXPECT(std::fabs(measured - snr) <= 0.01,
             "asked for " + fmt(snr) + " dB, measured " + fmt(measured));
    }
  }

  {
    convsim::RirEntry ref_pos;
    ref_pos.height_m = 1.5;
    ref_pos.distance_m = 1.0;
    ref_pos.elevation_deg = 0.0;
    EXPECT(convsim::realism_score(ref_pos) == 0.0,
           "the reference position must score exactly 0");
  }

  Rng rng(314);
  for (int trial = 0; trial < 20; ++trial) {
    const int n_src = 5 + trial % 8;
    std::vector<convsim::RirEntry> db;
    for (int s = 0; s < n_src; ++s) {
      const double az = static_cast<double>(rng.next_index(360));
      const int n_mics = 1 + static_cast<int>(rng.next_index(2));
      for (int m = 0; m < n_mics; ++m) {
        convsim::RirEntry e;
        e.room_id = "r";
        e.source_id = "s" + std::to_string(s);
        e.mic_id = "m" + std::to_string(m);
        e.height_m = 0.8 + 1.4 * rng.next_double();
        e.distance_m = 0.3 + 2.2 * rng.next_double();
        e.elevation_deg = -30.0 + 60.0 * rng.next_double();
        e.azimuth_deg = az;
        e.ir_path = "unused.wav";
        db.push_back(std::move(e));
      }
    }
    const auto sel =
        convsim::select_rirs(db, "r", 3, convsim::RirMode::kRealism, 25.0, rng);
    EXPECT(sel.assignments.size() == 3, "expected 3 picked sources");

    const auto sources = convsim::acoustics_detail::room_sources(db, "r", {});
    std::map<std::string, std::pair<double, double>> by_id;  // score, azimuth
    for (const auto& s : sources) by_id[s.source_id] = {s.best_score, s.azimuth_deg};
    double greedy_total = 0.0;
    for (const auto& a : sel.assignments)
      greedy_total += by_id.at(a.entry.source_id).first;

    // Exhaustive optimum over source triples at the separation the picker
    // actually enforced.
    double best_total = std::numeric_limits<double>::infinity();
    const std::size_t n = sources.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
          const double sep_ij = convsim::circular_azimuth_distance(
              sources[i].azimuth_deg, sources[j].azimuth_deg);
          const double sep_ik = convsim::circular_azimuth_distance(
              sources[i].azimuth_deg, sources[k].azimuth_deg);
          const double sep_jk = convsim::circular_azimuth_distance(
              sources[j].azimuth_deg, sources[k].azimuth_deg);
          if (sep_ij < sel.min_sep_deg_used || sep_ik < sel.min_sep_deg_used ||
              sep_jk < sel.min_sep_deg_used)
            continue;
          best_total = std::min(best_total, sources[i].best_score +
                                                sources[j].best_score +
                                                sources[k].best_score);
        }
    EXPECT(best_total < std::numeric_limits<double>::infinity(),
           "the brute force found no feasible triple the greedy pick implies");
    EXPECT(greedy_total <= 1.25 * best_total + 1e-9,
           "trial " + std::to_string(trial) + ": greedy " + fmt(greedy_total) +
               " vs optimum " + fmt(best_total));
  }
  return true;
}

// [9] Clip segmentation: every clip obeys the duration cap, the clips form an
// exact in-order partition of the input turns, and clip-relative times agree
// with absolute ones.
bool crit_segmenter(std::string& why) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_index(40));
    std::vector<convsim::TranscriptTurn> turns;
    double prev_onset = 0.0;
    double prev_offset = 0.0;
    for (int k = 0; k < n; ++k) {
      const double dur = 0.5 + 9.0 * rng.next_double();
      double onset = 0.0;
      if (k > 0) {
        const double gap = -0.4 + 2.0 * rng.next_double();
        onset = std::max(prev_offset + gap, prev_onset + 0.01);
      }
      convsim::TranscriptTurn t;
      t.speaker_id = "s" + std::to_string(k % 3);
      t.text = "turn " + std::to_string(k);
      t.onset_s = onset;
      t.offset_s = onset + dur;
      turns.push_back(std::move(t));
      prev_onset = onset;
      prev_offset = onset + dur;
    }

    const auto clips = convsim::segment_conversation("conv", turns, 30.0);
    EXPECT(!clips.empty(), "no clips produced");
    std::size_t j = 0;
    for (const auto& clip : clips) {
      EXPECT(clip.abs_offset_s - clip.abs_onset_s <= 30.0 + 1e-9,
             "a clip spans " + fmt(clip.abs_offset_s - clip.abs_onset_s) + " s");
      EXPECT(!clip.turns.empty(), "an empty clip came out");
      EXPECT(clip.abs_onset_s == clip.turns.front().abs_onset_s,
             "clip onset is not its first turn's onset");
      double last_audible = 0.0;
      for (const auto& ct : clip.turns) {
        EXPECT(j < turns.size(), "more clip turns than input turns");
        const auto& in = turns[j];
        EXPECT(ct.speaker_id == in.speaker_id && ct.text == in.text &&
                   ct.abs_onset_s == in.onset_s && ct.abs_offset_s == in.offset_s,
               "clip turn " + std::to_string(j) + " does not match the input");
        EXPECT(std::fabs(ct.rel_onset_s - (ct.abs_onset_s - clip.abs_onset_s)) <= 1e-9,
               "relative onset drifted on turn " + std::to_string(j));
        EXPECT(std::fabs(ct.rel_offset_s - (ct.abs_offset_s - clip.abs_onset_s)) <= 1e-9,
               "relative offset drifted on turn " + std::to_string(j));
        last_audible = std::max(last_audible, ct.abs_offset_s);
        ++j;
      }
      EXPECT(clip.abs_offset_s == last_audible,
             "clip end is not the latest turn end inside it");
    }
    EXPECT(j == turns.size(),
           std::to_string(turns.size() - j) + " turns were dropped");
  }
  return true;
}

// [10] Long-pause compression: identity at and below the knee (overlaps
// included), order preserving everywhere, and exact on a closed-form point.
bool crit_compression(std::string& why) {
  Rng rng(5150);
  convsim::GapSamples gs;
  for (int i = 0; i < 10000; ++i) {
    convsim::GapSample g;
    g.delta_s = -3.0 + 13.0 * rng.next_double();
    g.same_speaker = (i % 2) == 0;
    g.conversation_id = "c";
    g.speaker_id = "s";
    gs.items.push_back(std::move(g));
  }
  const auto out = convsim::compress_pauses(gs, 2.0, 0.5);
  EXPECT(out.items.size() == gs.items.size(), "sample count changed");

  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(gs.items.size());
  for (std::size_t i = 0; i < gs.items.size(); ++i) {
    const double before = gs.items[i].delta_s;
    const double after = out.items[i].delta_s;
    if (before <= 2.0)
      EXPECT(after == before, "a value below the knee changed: " + fmt(before));
    pairs.emplace_back(before, after);
  }
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t i = 1; i < pairs.size(); ++i) {
    if (pairs[i - 1].first < pairs[i].first)
      EXPECT(pairs[i - 1].second < pairs[i].second,
             "order not preserved near " + fmt(pairs[i].first));
    else
      EXPECT(pairs[i - 1].second == pairs[i].second,
             "equal inputs mapped to different outputs");
  }

  EXPECT(convsim::compress_gap(8.0, 2.0, 0.5) == 4.0,
         "f(8) with knee 2 and exponent 0.5 must be exactly 4");
  EXPECT(convsim::compress_gap(2.0, 2.0, 0.5) == 2.0,
         "the knee itself must pass through unchanged");
  EXPECT(convsim::compress_gap(-1.5, 2.0, 0.5) == -1.5,
         "overlaps (negative gaps) must pass through unchanged");
  return true;
}

// On-disk fixture for the batch criteria: a two-speaker corpus of short sine
// tones, a three-source room, and a noise bed, all under one temp dir.
struct DiskFixture {
  std::string corpus_manifest;
  std::string rir_manifest;
  std::string noise_manifest;
};

DiskFixture build_disk_fixture(const testutil::TempDir& dir) {
  namespace fs = std::filesystem;
  DiskFixture fx;
  fs::create_directories(dir.path() + "/corpus");

  std::string corpus;
  int tone = 0;
  for (int s = 0; s < 2; ++s) {
    const std::string spk = "spk" + std::to_string(s);
    for (int i = 0; i < 6; ++i) {
      const std::string wav = dir.path() + "/corpus/" + spk + "_u" +
                              std::to_string(i) + ".wav";
      convsim::write_wav_f32(
          wav, testutil::make_sine(0.3, 16000, 200.0 + 35.0 * tone++, 0.1), 16000);
      convsim::Json rec;
      rec["id"] = spk + "_u" + std::to_string(i);
      rec["speaker_id"] = spk;
      rec["book_id"] = "bk";
      rec["duration_s"] = 0.3;
      rec["transcript"] = "utterance " + std::to_string(i) + " as read";
      rec["audio_path"] = wav;
      rec["sample_rate_hz"] = 16000;
      corpus += rec.dump() + "\n";
    }
  }
  fx.corpus_manifest = dir.file("corpus.jsonl");
  convsim::write_file_atomic(fx.corpus_manifest, corpus);

  std::string rirs;
  for (int i = 0; i < 3; ++i) {
    const std::string wav = dir.file("rir" + std::to_string(i) + ".wav");
    convsim::write_wav_f32(wav, testutil::make_rir(64, 0.3, 11 + i), 16000);
    convsim::Json rec;
    rec["room_id"] = "room_a";
    rec["source_id"] = "src" + std::to_string(i);
    rec["mic_id"] = "m0";
    rec["height_m"] = 1.4 + 0.1 * i;
    rec["distance_m"] = 1.0;
    rec["elevation_deg"] = 0.0;
    rec["azimuth_deg"] = 90.0 * i;
    rec["ir_path"] = wav;
    rirs += rec.dump() + "\n";
  }
  fx.rir_manifest = dir.file("rirs.jsonl");
  convsim::write_file_atomic(fx.rir_manifest, rirs);

  const std::string noise_wav = dir.file("noise.wav");
  convsim::write_wav_f32(noise_wav, testutil::make_noise(5.0, 16000, 0.05, 99),
                         16000);
  convsim::Json rec;
  rec["audio_path"] = noise_wav;
  fx.noise_manifest = dir.file("noise.jsonl");
  convsim::write_file_atomic(fx.noise_manifest, rec.dump() + "\n");
  return fx;
}

// [11] Two full batch runs from one seed produce byte-identical artifacts:
// audio, RTTM, metadata, and every manifest.
bool crit_determinism(std::string& why) {
  namespace fs = std::filesystem;
  testutil::TempDir dir;
  const DiskFixture fx = build_disk_fixture(dir);

  const convsim::StatsDoc doc{
      true, 2.0, 0.5,
      convsim::MeanPauseModel{convsim::GapKde({0.2, 0.35}, 0.02),
                              convsim::GapKde({0.25, 0.4}, 0.02),
                              convsim::GapKde({-0.05, 0.05}, 0.01),
                              convsim::GapKde({-0.05, 0.05}, 0.01)},
      convsim::TurnModel(1, 2, {{0.4, 0.6}, {0.6, 0.4}}),
      0.1, 10, 10};

  convsim::PipelineConfig cfg;
  cfg.corpus_manifest = fx.corpus_manifest;
  cfg.rir_manifest = fx.rir_manifest;
  cfg.noise_manifest = fx.noise_manifest;
  cfg.sim.n_spk = 2;
  cfg.sim.n_utterances_min = 6;
  cfg.sim.n_utterances_max = 6;
  cfg.sim.min_utts_per_speaker = 3;
  cfg.sim.noise_enabled = true;
  cfg.sim.realism_fraction = 0.5;
  cfg.sim.master_seed = 4242;
  cfg.snr.kind = convsim::SnrSpec::Kind::kFixed;
  cfg.snr.fixed_db = 15.0;
  cfg.min_duration_s = 0.2;
  cfg.max_clip_s = 1.2;
  cfg.workers = 4;

  std::ostringstream sink;
  for (const char* name : {"a", "b"}) {
    convsim::PipelineConfig run = cfg;
    run.output_dir = dir.path() + "/" + name;
    fs::create_directories(run.output_dir);
    convsim::save_stats_doc(run.stats_path(), doc);
    const auto r = convsim::run_generate(run, 4, sink);
    EXPECT(r.n_rendered == 4 && r.failures.empty(),
           std::string("generation failed in run ") + name);
    convsim::run_segment(run, sink);
  }

  const std::string a = dir.path() + "/a";
  const std::string b = dir.path() + "/b";
  for (const char* rel : {"/conversations.jsonl", "/clips.jsonl", "/full.jsonl"})
    EXPECT(convsim::read_file(a + rel) == convsim::read_file(b + rel),
           std::string(rel + 1) + " differs between the runs");

  for (const char* sub : {"/conversations", "/clips"}) {
    std::vector<std::string> names_a, names_b;
    for (const auto& e : fs::directory_iterator(a + sub))
      names_a.push_back(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(b + sub))
      names_b.push_back(e.path().filename().string());
    std::sort(names_a.begin(), names_a.end());
    std::sort(names_b.begin(), names_b.end());
    EXPECT(names_a == names_b, std::string(sub + 1) + " listings differ");
    EXPECT(!names_a.empty(), std::string(sub + 1) + " is empty");
    for (const auto& name : names_a)
      EXPECT(convsim::read_file(a + sub + "/" + name) ==
                 convsim::read_file(b + sub + "/" + name),
             name + " differs between the runs");
  }
  return true;
}

// [12] Throughput: an hour of multi-speaker audio (20 conversations x ~3 min)
// renders with reverb on 4 workers inside the two-minute budget.
bool crit_throughput(std::string& why) {
  namespace fs = std::filesystem;
  testutil::TempDir dir;
  fs::create_directories(dir.path() + "/corpus");

  // All manifest rows of a speaker share one long source recording; ids stay
  // distinct so the pool still holds 20 drawable utterances per speaker.
  std::string corpus;
  for (int s = 0; s < 2; ++s) {
    const std::string spk = "spk" + std::to_string(s);
    const std::string wav = dir.path() + "/corpus/" + spk + ".wav";
    convsim::write_wav_f32(
        wav, testutil::make_sine(9.0, 16000, 220.0 + 110.0 * s, 0.1), 16000);
    for (int i = 0; i < 20; ++i) {
      convsim::Json rec;
      rec["id"] = spk + "_u" + std::to_string(i);
      rec["speaker_id"] = spk;
      rec["book_id"] = "bk";
      rec["duration_s"] = 9.0;
      rec["transcript"] = "long read passage number " + std::to_string(i);
      rec["audio_path"] = wav;
      rec["sample_rate_hz"] = 16000;
      corpus += rec.dump() + "\n";
    }
  }
  const std::string corpus_manifest = dir.file("corpus.jsonl");
  convsim::write_file_atomic(corpus_manifest, corpus);

  std::string rirs;
  for (int i = 0; i < 3; ++i) {
    const std::string wav = dir.file("rir" + std::to_string(i) + ".wav");
    convsim::write_wav_f32(wav, testutil::make_rir(8000, 0.2, 21 + i), 16000);
    convsim::Json rec;
    rec["room_id"] = "hall";
    rec["source_id"] = "s" + std::to_string(i);
    rec["mic_id"] = "m0";
    rec["height_m"] = 1.5;
    rec["distance_m"] = 1.0;
    rec["elevation_deg"] = 0.0;
    rec["azimuth_deg"] = 120.0 * i;
    rec["ir_path"] = wav;
    rirs += rec.dump() + "\n";
  }
  const std::string rir_manifest = dir.file("rirs.jsonl");
  convsim::write_file_atomic(rir_manifest, rirs);

  // Strictly positive pauses keep the schedule compact and predictable.
  const convsim::StatsDoc doc{
      true, 2.0, 0.5,
      convsim::MeanPauseModel{convsim::GapKde({0.2, 0.3}, 0.01),
                              convsim::GapKde({0.2, 0.3}, 0.01),
                              convsim::GapKde({-0.02, 0.02}, 0.005),
                              convsim::GapKde({-0.02, 0.02}, 0.005)},
      convsim::TurnModel(1, 2, {{0.5, 0.5}, {0.5, 0.5}}),
      0.0, 0, 0};

  convsim::PipelineConfig cfg;
  cfg.corpus_manifest = corpus_manifest;
  cfg.rir_manifest = rir_manifest;
  cfg.sim.n_spk = 2;
  cfg.sim.n_utterances_min = 20;
  cfg.sim.n_utterances_max = 20;
  cfg.sim.min_utts_per_speaker = 5;
  cfg.sim.realism_fraction = 0.5;
  cfg.sim.master_seed = 99;
  cfg.workers = 4;
  cfg.output_dir = dir.path() + "/out";
  fs::create_directories(cfg.output_dir);
  convsim::save_stats_doc(cfg.stats_path(), doc);

  std::ostringstream sink;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = convsim::run_generate(cfg, 20, sink);
  const double dt = elapsed_s(t0);
  EXPECT(r.n_rendered == 20,
         "rendered " + std::to_string(r.n_rendered) + " of 20");
  EXPECT(r.failures.empty(),
         std::to_string(r.failures.size()) + " conversations failed");

  double total_s = 0.0;
  convsim::for_each_jsonl(cfg.batch_manifest_path(),
                          [&](const convsim::Json& j, int) {
                            total_s += j["duration_s"].get<double>();
                          });
  EXPECT(total_s >= 3600.0, "only " + fmt(total_s) + " s of audio came out");
  EXPECT(dt < 120.0,
         "rendered " + fmt(total_s) + " s of audio in " + fmt(dt) + " s");
  return true;
}

struct Criterion {
  const char* what;
  bool (*run)(std::string&);
};

}  // namespace

int main() {
  const Criterion checks[] = {
      {"planner reproduces a closed-form schedule under point-mass pauses",
       crit_deterministic_plan},
      {"sampled gaps match the composed pause distribution and overlap share",
       crit_gap_distribution},
      {"planned turn-taking follows the transition matrix within 0.05",
       crit_turn_taking},
      {"speaker-change transcripts serialize byte-exactly", crit_sot_format},
      {"order-tolerant WER never beats plain WER and matches brute force",
       crit_cpwer},
      {"diarization error agrees with a frame oracle and ignores labels",
       crit_der},
      {"splits keep speakers disjoint and land within 5% of target ratios",
       crit_splits},
      {"convolution, SNR mixing, and source picking hit their references",
       crit_acoustics},
      {"clip segmentation partitions turns under the duration cap",
       crit_segmenter},
      {"pause compression is identity below the knee and order-preserving",
       crit_compression},
      {"two batch runs from one seed are byte-identical", crit_determinism},
      {"an hour of conversation audio renders inside the time budget",
       crit_throughput},
  };

  bool all_ok = true;
  int idx = 1;
  for (const auto& c : checks) {
    std::string why;
    bool ok = false;
    try {
      ok = c.run(why);
    } catch (const std::exception& e) {
      ok = false;
      why = std::string("exception: ") + e.what();
    }
    if (ok)
      std::printf("[%2d] PASS  %s\n", idx, c.what);
    else
      std::printf("[%2d] FAIL  %s (%s)\n", idx, c.what, why.c_str());
    std::fflush(stdout);
    all_ok = all_ok && ok;
    ++idx;
  }
  return all_ok ? 0 : 1;
}
