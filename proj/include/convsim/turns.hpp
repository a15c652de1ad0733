// convsim/turns.hpp

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

// Markov turn-taking model over speaker slots. Slots are conversation-
// relative: 0 is whoever spoke first, so a model fitted on two-party
// telephone data transfers to any speaker pair.

#ifndef CONVSIM_TURNS_HPP_
#define CONVSIM_TURNS_HPP_

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "convsim/error.hpp"
#include "convsim/rng.hpp"

namespace convsim {

class TurnModel {
 public:
  /// rows[packed_history][next_slot]; each row must sum to 1 within 1e-9.
  TurnModel(int order, int n_slots, std::vector<std::vector<double>> rows)
      : order_(order), n_slots_(n_slots), rows_(std::move(rows)) {
    if (order_ < 1) throw InputError("TurnModel: order must be >= 1");
    if (n_slots_ < 1) throw InputError("TurnModel: n_slots must be >= 1");
    std::size_t expected = 1;
    for (int i = 0; i < order_; ++i) expected *= static_cast<std::size_t>(n_slots_);
    if (rows_.size() != expected)
      throw InputError("TurnModel: expected " + std::to_string(expected) + " rows");
    for (const auto& row : rows_) {
      if (row.size() != static_cast<std::size_t>(n_slots_))
        throw InputError("TurnModel: row width mismatch");
      double sum = 0.0;
      for (double p : row) {
        if (p < 0.0) throw InputError("TurnModel: negative probability");
        sum += p;
      }
      if (std::fabs(sum - 1.0) > 1e-9)
        throw InputError("TurnModel: row does not sum to 1");
    }
  }

  /// Add-alpha smoothed relative frequencies of next slot given the previous
  /// `order` slots. Histories never observed get a uniform row when alpha is
  /// 0, the smoothed prior otherwise, so every history has a valid row.
  static TurnModel estimate(const std::vector<std::vector<int>>& sequences,
                            int order, int n_slots, double alpha = 0.1) {
    if (order < 1) throw InputError("estimate_turn_model: order must be >= 1");
    if (n_slots < 1) throw InputError("estimate_turn_model: n_slots must be >= 1");
    if (alpha < 0.0) throw InputError("estimate_turn_model: alpha must be >= 0");
    if (sequences.empty()) throw InputError("estimate_turn_model: no sequences");

    std::size_t n_hist = 1;
    for (int i = 0; i < order; ++i) n_hist *= static_cast<std::size_t>(n_slots);
    std::vector<std::vector<double>> counts(n_hist,
                                            std::vector<double>(n_slots, 0.0));
    for (const auto& seq : sequences) {
      if (static_cast<int>(seq.size()) <= order)
        throw InputError("estimate_turn_model: sequence shorter than order + 1");
      for (int s : seq)
        if (s < 0 || s >= n_slots)
          throw InputError("estimate_turn_model: slot " + std::to_string(s) +
                           " out of range [0, " + std::to_string(n_slots) + ")");
      for (std::size_t t = static_cast<std::size_t>(order); t < seq.size(); ++t) {
        std::size_t h = 0;
        for (int k = 0; k < order; ++k)
          h = h * static_cast<std::size_t>(n_slots) +
              static_cast<std::size_t>(seq[t - static_cast<std::size_t>(order) +
                                           static_cast<std::size_t>(k)]);
        counts[h][static_cast<std::size_t>(seq[t])] += 1.0;
      }
    }

    std::vector<std::vector<double>> rows(n_hist, std::vector<double>(n_slots));
    for (std::size_t h = 0; h < n_hist; ++h) {
      double total = 0.0;
      for (double c : counts[h]) total += c;
      if (total == 0.0 && alpha == 0.0) {
        for (int s = 0; s < n_slots; ++s)
          rows[h][static_cast<std::size_t>(s)] = 1.0 / static_cast<double>(n_slots);
      } else {
        const double denom = total + alpha * static_cast<double>(n_slots);
        for (int s = 0; s < n_slots; ++s)
          rows[h][static_cast<std::size_t>(s)] =
              (counts[h][static_cast<std::size_t>(s)] + alpha) / denom;
      }
    }
    return TurnModel(order, n_slots, std::move(rows));
  }

  int order() const { return order_; }
  int n_slots() const { return n_slots_; }

  const std::vector<double>& row(const std::vector<int>& history) const {
    return rows_[pack(history)];
  }

  double probability(const std::vector<int>& history, int next) const {
    if (next < 0 || next >= n_slots_) throw Error("TurnModel: slot out of range");
    return rows_[pack(history)][static_cast<std::size_t>(next)];
  }

  /// Categorical draw from the row for `history`.
  int sample_next(const std::vector<int>& history, Rng& rng) const {
    const auto& row = rows_[pack(history)];
    const double u = rng.next_double();
    double acc = 0.0;
    for (int s = 0; s < n_slots_; ++s) {
      acc += row[static_cast<std::size_t>(s)];
      if (u < acc) return s;
    }
    return n_slots_ - 1;  // rounding spill
  }

  const std::vector<std::vector<double>>& rows() const { return rows_; }

 private:
  std::size_t pack(const std::vector<int>& history) const {
    if (static_cast<int>(history.size()) != order_)
      throw Error("TurnModel: history length must equal order");
    std::size_t h = 0;
    for (int s : history) {
      if (s < 0 || s >= n_slots_) throw Error("TurnModel: slot out of range");
      h = h * static_cast<std::size_t>(n_slots_) + static_cast<std::size_t>(s);
    }
    return h;
  }

  int order_;
  int n_slots_;
  std::vector<std::vector<double>> rows_;
};

inline TurnModel estimate_turn_model(const std::vector<std::vector<int>>& sequences,
                                     int order, int n_slots, double alpha = 0.1) {
  return TurnModel::estimate(sequences, order, n_slots, alpha);
}

/// Maps a conversation's speaker sequence to relative slot indices by first
/// appearance (first speaker becomes slot 0).
inline std::vector<int> to_slot_sequence(const std::vector<std::string>& speakers) {
  std::vector<std::string> seen;
  std::vector<int> slots;
  slots.reserve(speakers.size());
  for (const auto& s : speakers) {
    int slot = -1;
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (seen[i] == s) { slot = static_cast<int>(i); break; }
    if (slot < 0) {
      slot = static_cast<int>(seen.size());
      seen.push_back(s);
    }
    slots.push_back(slot);
  }
  return slots;
}

}  // namespace convsim

#endif  // CONVSIM_TURNS_HPP_
