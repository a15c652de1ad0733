// convsim/stats.hpp

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

// Timing statistics for conversation simulation.
//
// The central object is the signed gap between consecutive utterances,
// delta = onset_n - offset_{n-1}: negative means overlap, non-negative means
// pause. A Gaussian-kernel density estimate over gap samples gives a smooth
// sampling distribution; the probability mass over the negative axis is the
// overlap probability. On top of the unified gaps sit four derived
// distributions: per-speaker mean gaps for same-speaker and speaker-change
// transitions, and the zero-mean deviation distributions around those means.

#ifndef CONVSIM_STATS_HPP_
#define CONVSIM_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "convsim/error.hpp"
#include "convsim/rng.hpp"

namespace convsim {

// ---------------------------------------------------------------------------
// Gap extraction
// ---------------------------------------------------------------------------

/// One speech interval from a VAD-style segment manifest.
struct SegmentRecord {
  std::string conversation_id;
  std::string speaker;
  double onset_s = 0.0;
  double offset_s = 0.0;
};

/// One observed gap. The speaker is the one *starting* the new turn, which is
/// the speaker whose timing habit the gap reflects.
struct GapSample {
  double delta_s = 0.0;
  bool same_speaker = false;
  std::string conversation_id;
  std::string speaker_id;
};

struct GapSamples {
  std::vector<GapSample> items;

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(items.size());
    for (const auto& g : items) v.push_back(g.delta_s);
    return v;
  }
};

/// Computes consecutive-interval gaps per conversation. Records are grouped
/// by conversation_id (order of first appearance); within each conversation
/// intervals must be onset-sorted and have non-negative duration.
inline GapSamples extract_gaps(const std::vector<SegmentRecord>& manifest) {
  std::vector<std::string> conv_order;
  std::map<std::string, std::vector<const SegmentRecord*>> by_conv;
  for (const auto& rec : manifest) {
    if (rec.offset_s < rec.onset_s)
      throw InputError("segment with negative duration in conversation " +
                       rec.conversation_id);
    auto [it, inserted] = by_conv.try_emplace(rec.conversation_id);
    if (inserted) conv_order.push_back(rec.conversation_id);
    it->second.push_back(&rec);
  }
  GapSamples out;
  for (const auto& conv_id : conv_order) {
    const auto& recs = by_conv[conv_id];
    for (std::size_t i = 1; i < recs.size(); ++i) {
      if (recs[i]->onset_s < recs[i - 1]->onset_s)
        throw InputError("unsorted intervals in conversation " + conv_id);
      GapSample g;
      g.delta_s = recs[i]->onset_s - recs[i - 1]->offset_s;
      g.same_speaker = recs[i]->speaker == recs[i - 1]->speaker;
      g.conversation_id = conv_id;
      g.speaker_id = recs[i]->speaker;
      out.items.push_back(std::move(g));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Temporal compression
// ---------------------------------------------------------------------------

/// Power-law knee: identity for delta <= knee_s (overlaps included), and
/// knee_s * (delta/knee_s)^exponent above it. Strictly increasing, continuous
/// at the knee, and never lengthens a gap.
inline double compress_gap(double delta_s, double knee_s, double exponent) {
  if (delta_s <= knee_s) return delta_s;
  return knee_s * std::pow(delta_s / knee_s, exponent);
}

inline GapSamples compress_pauses(const GapSamples& samples, double knee_s,
                                  double exponent) {
  if (!(knee_s > 0.0)) throw InputError("compress_pauses: knee_s must be > 0");
  if (!(exponent > 0.0) || exponent > 1.0)
    throw InputError("compress_pauses: exponent must be in (0, 1]");
  GapSamples out = samples;
  for (auto& g : out.items) g.delta_s = compress_gap(g.delta_s, knee_s, exponent);
  return out;
}

// ---------------------------------------------------------------------------
// Kernel density estimation
// ---------------------------------------------------------------------------

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

namespace stats_detail {

/// Quantile with linear interpolation between order statistics.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace stats_detail

/// Silverman's rule of thumb: 0.9 * min(sd, IQR/1.34) * n^(-1/5), floored at
/// 1e-4 s so degenerate inputs still yield a proper density.
inline double silverman_bandwidth(const std::vector<double>& values) {
  constexpr double kFloor = 1e-4;
  const std::size_t n = values.size();
  if (n < 2) return kFloor;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  const double iqr = stats_detail::quantile_sorted(sorted, 0.75) -
                     stats_detail::quantile_sorted(sorted, 0.25);
  const double spread = std::min(sd, iqr / 1.34);
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  return std::max(h, kFloor);
}

/// Gaussian-kernel density estimate over a set of support points.
class GapKde {
 public:
  GapKde(std::vector<double> support, double bandwidth)
      : support_(std::move(support)), bandwidth_(bandwidth) {
    if (support_.empty()) throw InputError("GapKde: empty support");
    if (!(bandwidth_ > 0.0)) throw InputError("GapKde: bandwidth must be > 0");
  }

  /// Explicit bandwidth, or Silverman's rule when unset.
  static GapKde fit(const std::vector<double>& values,
                    std::optional<double> bandwidth = std::nullopt) {
    if (values.empty()) throw InputError("fit_kde: no values");
    double h;
    if (bandwidth) {
      if (!(*bandwidth > 0.0))
        throw InputError("fit_kde: explicit bandwidth must be > 0");
      h = *bandwidth;
    } else {
      h = silverman_bandwidth(values);
    }
    return GapKde(values, h);
  }

  const std::vector<double>& support() const { return support_; }
  double bandwidth() const { return bandwidth_; }

  double density(double x) const {
    constexpr double inv_sqrt_2pi = 0.3989422804014326779399461;
    const double h = bandwidth_;
    double acc = 0.0;
    for (double xi : support_) {
      const double z = (x - xi) / h;
      acc += std::exp(-0.5 * z * z);
    }
    return acc * inv_sqrt_2pi / (h * static_cast<double>(support_.size()));
  }

  double cdf(double x) const {
    double acc = 0.0;
    for (double xi : support_) acc += normal_cdf((x - xi) / bandwidth_);
    return acc / static_cast<double>(support_.size());
  }

  /// Uniform support point plus bandwidth-scaled Gaussian perturbation.
  double sample(Rng& rng) const {
    const double xi = support_[rng.next_index(support_.size())];
    return xi + bandwidth_ * rng.next_gaussian();
  }

  /// Probability mass over the negative axis; exact for a Gaussian kernel.
  double p_overlap() const { return cdf(0.0); }

  double mean() const {
    double acc = 0.0;
    for (double xi : support_) acc += xi;
    return acc / static_cast<double>(support_.size());
  }

 private:
  std::vector<double> support_;
  double bandwidth_;
};

inline GapKde fit_kde(const std::vector<double>& values,
                      std::optional<double> bandwidth = std::nullopt) {
  return GapKde::fit(values, bandwidth);
}

inline double sample_kde(const GapKde& kde, Rng& rng) { return kde.sample(rng); }

inline double p_overlap(const GapKde& kde) { return kde.p_overlap(); }

// ---------------------------------------------------------------------------
// Per-speaker pause models
// ---------------------------------------------------------------------------

/// The four fitted distributions: per-speaker mean gaps for same-speaker and
/// speaker-change transitions, and zero-mean deviations around those means.
struct MeanPauseModel {
  GapKde same_means;
  GapKde diff_means;
  GapKde same_dev;
  GapKde diff_dev;
};

/// Per-speaker sampling state inside one simulated conversation: the base
/// mean is drawn once on the speaker's first gap of each kind.
struct SpeakerGapState {
  std::optional<double> mu_same;
  std::optional<double> mu_diff;
};

/// Groups gaps by (conversation, speaker, label). Each group's mean feeds the
/// mean distribution; groups with >= 2 gaps also contribute their deviations,
/// which are pooled per label and re-centered to exact zero mean.
///
/// Below 30 deviation points the KDE is thin but usable; below 10, a warning
/// string is appended to `warnings` if given.
inline MeanPauseModel fit_pause_models(const GapSamples& samples,
                                       std::optional<double> mean_bandwidth = std::nullopt,
                                       std::optional<double> dev_bandwidth = std::nullopt,
                                       std::vector<std::string>* warnings = nullptr) {
  using GroupKey = std::tuple<std::string, std::string, bool>;
  std::map<GroupKey, std::vector<double>> groups;
  for (const auto& g : samples.items)
    groups[{g.conversation_id, g.speaker_id, g.same_speaker}].push_back(g.delta_s);

  std::vector<double> means[2];  // [0]=diff, [1]=same
  std::vector<double> devs[2];
  for (const auto& [key, vals] : groups) {
    const int label = std::get<2>(key) ? 1 : 0;
    double mu = 0.0;
    for (double v : vals) mu += v;
    mu /= static_cast<double>(vals.size());
    means[label].push_back(mu);
    if (vals.size() >= 2)
      for (double v : vals) devs[label].push_back(v - mu);
  }

  const char* label_names[2] = {"diff_speaker", "same_speaker"};
  for (int label = 0; label < 2; ++label) {
    if (means[label].empty())
      throw InputError(std::string("fit_pause_models: no ") + label_names[label] +
                       " gaps in the input");
    if (devs[label].empty())
      throw InputError(std::string("fit_pause_models: no speaker with >= 2 ") +
                       label_names[label] + " gaps; cannot fit deviations");
    // re-center deviations to exact zero mean
    double m = 0.0;
    for (double v : devs[label]) m += v;
    m /= static_cast<double>(devs[label].size());
    for (double& v : devs[label]) v -= m;
    if (warnings && devs[label].size() < 10)
      warnings->push_back(std::string("only ") + std::to_string(devs[label].size()) +
                          " " + label_names[label] +
                          " deviation points; sampled deviations will be coarse");
  }

  return MeanPauseModel{
      GapKde::fit(means[1], mean_bandwidth), GapKde::fit(means[0], mean_bandwidth),
      GapKde::fit(devs[1], dev_bandwidth), GapKde::fit(devs[0], dev_bandwidth)};
}

}  // namespace convsim

#endif  // CONVSIM_STATS_HPP_
