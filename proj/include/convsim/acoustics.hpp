// convsim/acoustics.hpp

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

// Room acoustics: the RIR database, realism-ranked speaker/microphone
// selection, FFT overlap-add convolution, and SNR-controlled noise mixing.
//
// An RIR entry is one (room, source position, microphone) configuration with
// its geometric attributes. Selection scores each configuration against a
// reference talking position (1.5 m source height, 1 m source-microphone
// distance, 0 deg elevation); lower deviation scores read as more plausible.
// Azimuth never enters the score; it only drives the pairwise spatial
// diversity constraint between chosen sources.

#ifndef CONVSIM_ACOUSTICS_HPP_
#define CONVSIM_ACOUSTICS_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "convsim/audio.hpp"
#include "convsim/error.hpp"
#include "convsim/fft.hpp"
#include "convsim/rng.hpp"

namespace convsim {

// ---------------------------------------------------------------------------
// RIR database and realism scoring
// ---------------------------------------------------------------------------

struct RirEntry {
  std::string room_id;
  std::string source_id;
  std::string mic_id;
  double height_m = 0.0;
  double distance_m = 0.0;
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;  // in [0, 360)
  std::string ir_path;
};

struct RealismWeights {
  double w_height = 1.0;
  double w_distance = 1.0;
  double w_elevation = 1.0;

  static constexpr double kRefHeightM = 1.5;
  static constexpr double kRefDistanceM = 1.0;
  static constexpr double kRefElevationDeg = 0.0;
  static constexpr double kNormHeightM = 1.5;
  static constexpr double kNormDistanceM = 1.0;
  static constexpr double kNormElevationDeg = 90.0;
};

/// Weighted sum of normalized absolute deviations from the reference talking
/// position. Zero exactly at the reference point.
inline double realism_score(const RirEntry& entry, const RealismWeights& w = {}) {
  return w.w_height * std::fabs(entry.height_m - RealismWeights::kRefHeightM) /
             RealismWeights::kNormHeightM +
         w.w_distance * std::fabs(entry.distance_m - RealismWeights::kRefDistanceM) /
             RealismWeights::kNormDistanceM +
         w.w_elevation * std::fabs(entry.elevation_deg - RealismWeights::kRefElevationDeg) /
             RealismWeights::kNormElevationDeg;
}

/// d(a, b) = min(|a-b|, 360-|a-b|); symmetric, at most 180.
inline double circular_azimuth_distance(double a_deg, double b_deg) {
  double d = std::fabs(a_deg - b_deg);
  d = std::fmod(d, 360.0);
  return std::min(d, 360.0 - d);
}

// ---------------------------------------------------------------------------
// RIR selection
// ---------------------------------------------------------------------------

struct RirAssignment {
  int speaker_slot = 0;
  RirEntry entry;
};

enum class RirMode { kRealism, kUniform };

struct RirSelection {
  std::vector<RirAssignment> assignments;
  RirMode mode = RirMode::kUniform;
  double min_sep_deg_used = 0.0;  // separation actually enforced
  bool relaxed = false;           // true when the requested separation was infeasible
};

namespace acoustics_detail {

struct SourceInfo {
  std::string source_id;
  std::vector<const RirEntry*> entries;  // sorted by mic_id
  double best_score = 0.0;
  double azimuth_deg = 0.0;  // circular mean over entries
};

inline std::vector<SourceInfo> room_sources(const std::vector<RirEntry>& db,
                                            const std::string& room_id,
                                            const RealismWeights& weights) {
  std::map<std::string, std::vector<const RirEntry*>> by_source;
  for (const auto& e : db)
    if (e.room_id == room_id) by_source[e.source_id].push_back(&e);
  std::vector<SourceInfo> out;
  constexpr double deg2rad = 3.14159265358979323846 / 180.0;
  for (auto& [sid, entries] : by_source) {
    std::sort(entries.begin(), entries.end(),
              [](const RirEntry* a, const RirEntry* b) { return a->mic_id < b->mic_id; });
    SourceInfo info;
    info.source_id = sid;
    info.entries = entries;
    double best = 1e300;
    double sin_sum = 0.0, cos_sum = 0.0;
    for (const RirEntry* e : entries) {
      best = std::min(best, realism_score(*e, weights));
      sin_sum += std::sin(e->azimuth_deg * deg2rad);
      cos_sum += std::cos(e->azimuth_deg * deg2rad);
    }
    info.best_score = best;
    double az = std::atan2(sin_sum, cos_sum) / deg2rad;
    if (az < 0.0) az += 360.0;
    info.azimuth_deg = az;
    out.push_back(std::move(info));
  }
  return out;
}

/// Walks `order`, picking sources separated by at least `min_sep_deg` from
/// everything already picked. Returns indices into `sources`.
inline std::vector<std::size_t> greedy_pick(const std::vector<SourceInfo>& sources,
                                            const std::vector<std::size_t>& order,
                                            int n_spk, double min_sep_deg) {
  std::vector<std::size_t> picked;
  for (std::size_t idx : order) {
    bool ok = true;
    for (std::size_t p : picked) {
      if (circular_azimuth_distance(sources[idx].azimuth_deg,
                                    sources[p].azimuth_deg) < min_sep_deg) {
        ok = false;
        break;
      }
    }
    if (ok) {
      picked.push_back(idx);
      if (static_cast<int>(picked.size()) == n_spk) break;
    }
  }
  return picked;
}

}  // namespace acoustics_detail

/// Selects n_spk distinct sources in one room plus one RIR per source.
///
/// Realism mode walks sources in ascending best-entry score; uniform mode
/// walks a seeded shuffle. Either way a source is skipped when its azimuth is
/// closer than min_azimuth_sep_deg (circular) to an already-picked one. If
/// that leaves fewer than n_spk sources, the separation is relaxed in 5 deg
/// steps (floored at 0) until selection succeeds. Each picked source then
/// contributes one microphone entry drawn uniformly.
inline RirSelection select_rirs(const std::vector<RirEntry>& db,
                                const std::string& room_id, int n_spk,
                                RirMode mode, double min_azimuth_sep_deg,
                                Rng& rng, const RealismWeights& weights = {}) {
  using namespace acoustics_detail;
  if (n_spk < 1) throw InputError("select_rirs: n_spk must be >= 1");
  const std::vector<SourceInfo> sources = room_sources(db, room_id, weights);
  if (static_cast<int>(sources.size()) < n_spk)
    throw InfeasibleError("room " + room_id + " has " +
                          std::to_string(sources.size()) + " sources, need " +
                          std::to_string(n_spk));

  std::vector<std::size_t> order(sources.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (mode == RirMode::kRealism) {
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (sources[a].best_score != sources[b].best_score)
        return sources[a].best_score < sources[b].best_score;
      return sources[a].source_id < sources[b].source_id;
    });
  } else {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.next_index(i)]);
  }

  double sep = min_azimuth_sep_deg;
  std::vector<std::size_t> picked = greedy_pick(sources, order, n_spk, sep);
  while (static_cast<int>(picked.size()) < n_spk && sep > 0.0) {
    sep = std::max(0.0, sep - 5.0);
    picked = greedy_pick(sources, order, n_spk, sep);
  }
  if (static_cast<int>(picked.size()) < n_spk)
    throw InfeasibleError("room " + room_id + ": cannot place " +
                          std::to_string(n_spk) + " sources even without separation");

  RirSelection sel;
  sel.mode = mode;
  sel.min_sep_deg_used = sep;
  sel.relaxed = sep < min_azimuth_sep_deg;
  for (int slot = 0; slot < n_spk; ++slot) {
    const SourceInfo& src = sources[picked[static_cast<std::size_t>(slot)]];
    const RirEntry* entry = src.entries[rng.next_index(src.entries.size())];
    sel.assignments.push_back(RirAssignment{slot, *entry});
  }
  return sel;
}

/// All distinct room ids in the database holding at least n_spk sources.
inline std::vector<std::string> rooms_with_capacity(const std::vector<RirEntry>& db,
                                                    int n_spk) {
  std::map<std::string, std::map<std::string, int>> rooms;
  for (const auto& e : db) rooms[e.room_id][e.source_id] = 1;
  std::vector<std::string> out;
  for (const auto& [room, srcs] : rooms)
    if (static_cast<int>(srcs.size()) >= n_spk) out.push_back(room);
  return out;
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

/// Full linear convolution, length len(signal) + len(ir) - 1, computed by FFT
/// overlap-add. The FFT size depends only on the IR length, so the output is
/// bit-stable for a given IR regardless of how the signal is chunked.
inline SampleBuffer convolve(const SampleBuffer& signal, const SampleBuffer& ir) {
  if (signal.empty() || ir.empty()) throw InputError("convolve: empty input");
  const std::size_t m = ir.size();
  const std::size_t out_len = signal.size() + m - 1;
  const std::size_t fft_n = next_pow2(std::max<std::size_t>(256, 2 * m));
  const std::size_t block = fft_n - m + 1;

  std::vector<std::complex<double>> ir_spec(fft_n, {0.0, 0.0});
  for (std::size_t i = 0; i < m; ++i) ir_spec[i] = ir[i];
  fft_inplace(ir_spec, false);

  SampleBuffer out(out_len, 0.0);
  std::vector<std::complex<double>> buf(fft_n);
  for (std::size_t start = 0; start < signal.size(); start += block) {
    const std::size_t len = std::min(block, signal.size() - start);
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t i = 0; i < len; ++i) buf[i] = signal[start + i];
    fft_inplace(buf, false);
    for (std::size_t i = 0; i < fft_n; ++i) buf[i] *= ir_spec[i];
    fft_inplace(buf, true);
    const std::size_t tail = std::min(fft_n, out_len - start);
    for (std::size_t i = 0; i < tail; ++i) out[start + i] += buf[i].real();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Noise mixing
// ---------------------------------------------------------------------------

/// Repeats `noise` to at least `target_len` samples, joining repeats with a
/// 10 ms linear crossfade, then truncates. A prefix copy if already long enough.
inline SampleBuffer loop_to_length(const SampleBuffer& noise, std::size_t target_len,
                                   int sample_rate_hz) {
  if (noise.empty()) throw InputError("loop_to_length: empty noise");
  if (noise.size() >= target_len)
    return SampleBuffer(noise.begin(),
                        noise.begin() + static_cast<std::ptrdiff_t>(target_len));
  std::size_t fade = static_cast<std::size_t>(sample_rate_hz / 100);  // 10 ms
  fade = std::min(fade, noise.size() / 2);
  SampleBuffer out(noise);
  while (out.size() < target_len + fade) {
    const std::size_t base = out.size() - fade;
    for (std::size_t i = 0; i < fade; ++i) {
      const double t = (fade > 0) ? static_cast<double>(i + 1) / static_cast<double>(fade + 1)
                                  : 1.0;
      out[base + i] = out[base + i] * (1.0 - t) + noise[i] * t;
    }
    out.insert(out.end(), noise.begin() + static_cast<std::ptrdiff_t>(fade), noise.end());
  }
  out.resize(target_len);
  return out;
}

/// Adds noise scaled to hit the requested SNR over the signal span:
/// g = (rms(signal)/rms(noise)) * 10^(-snr_db/20). A +infinity SNR is the
/// noise-disabled sentinel and returns the signal unchanged.
inline SampleBuffer mix_noise(const SampleBuffer& signal, const SampleBuffer& noise,
                              double snr_db) {
  if (std::isinf(snr_db) && snr_db > 0.0) return signal;
  if (noise.size() < signal.size())
    throw InputError("mix_noise: noise shorter than signal; loop it first");
  const double rms_s = rms(signal);
  const double rms_n = rms(noise, signal.size());
  if (rms_s == 0.0) throw InputError("mix_noise: silent signal");
  if (rms_n == 0.0) throw InputError("mix_noise: silent noise");
  const double gain = rms_s / rms_n * std::pow(10.0, -snr_db / 20.0);
  SampleBuffer out(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i)
    out[i] = signal[i] + gain * noise[i];
  return out;
}

/// Scales the buffer to a 0.95 peak when any sample exceeds full scale.
/// Returns the gain applied (1.0 when untouched).
inline double peak_guard(SampleBuffer& x, double ceiling = 0.95) {
  const double peak = peak_abs(x);
  if (peak <= 1.0) return 1.0;
  const double gain = ceiling / peak;
  for (double& v : x) v *= gain;
  return gain;
}

}  // namespace convsim

#endif  // CONVSIM_ACOUSTICS_HPP_
