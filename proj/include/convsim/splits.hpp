// convsim/splits.hpp

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

// Speaker-disjoint dataset splits.
//
// Conversations sharing any speaker must land in the same subset, so the unit
// of assignment is a connected component of the speaker co-occurrence graph
// (speakers are nodes, each conversation a clique over its speakers).
// Components are then bin-packed greedily by duration toward the target
// ratios. Disjointness is exact by construction; ratios are approximate.

#ifndef CONVSIM_SPLITS_HPP_
#define CONVSIM_SPLITS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "convsim/error.hpp"
#include "convsim/rng.hpp"

namespace convsim {

struct ConversationInfo {
  std::string id;
  std::vector<std::string> speakers;
  double duration_s = 0.0;
};

enum class Split { kTrain = 0, kValidation = 1, kTest = 2 };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "?";
}

struct Component {
  std::vector<std::string> conversation_ids;  // sorted
  std::vector<std::string> speakers;          // sorted
  double duration_s = 0.0;
};

namespace splits_detail {

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) {
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
  std::vector<std::size_t> parent;
};

}  // namespace splits_detail

/// Connected components of the speaker co-occurrence graph. The result is
/// canonical — sorted by each component's smallest speaker id — so it does
/// not depend on the input order.
inline std::vector<Component> build_components(
    const std::vector<ConversationInfo>& conversations) {
  if (conversations.empty())
    throw InputError("build_components: no conversations");
  std::map<std::string, std::size_t> speaker_node;
  for (const auto& c : conversations) {
    if (c.speakers.empty())
      throw InputError("build_components: conversation " + c.id +
                       " has no speakers");
    for (const auto& s : c.speakers)
      speaker_node.emplace(s, speaker_node.size());
  }
  splits_detail::UnionFind uf(speaker_node.size());
  for (const auto& c : conversations) {
    const std::size_t first = speaker_node.at(c.speakers.front());
    for (const auto& s : c.speakers) uf.unite(speaker_node.at(s), first);
  }

  std::map<std::size_t, Component> by_root;
  for (const auto& [spk, node] : speaker_node)
    by_root[uf.find(node)].speakers.push_back(spk);  // map order: sorted
  for (const auto& c : conversations) {
    Component& comp = by_root[uf.find(speaker_node.at(c.speakers.front()))];
    comp.conversation_ids.push_back(c.id);
    comp.duration_s += c.duration_s;
  }

  std::vector<Component> out;
  for (auto& [root, comp] : by_root) {
    std::sort(comp.conversation_ids.begin(), comp.conversation_ids.end());
    out.push_back(std::move(comp));
  }
  std::sort(out.begin(), out.end(), [](const Component& a, const Component& b) {
    return a.speakers.front() < b.speakers.front();
  });
  return out;
}

struct SplitTotals {
  std::size_t n_speakers = 0;
  std::size_t n_conversations = 0;
  double duration_s = 0.0;
};

struct SplitAssignment {
  std::map<std::string, Split> by_conversation;
  std::array<SplitTotals, 3> totals;  // indexed by Split
};

/// Greedy duration packing: components are shuffled with the seed (the only
/// tie-breaking randomness), sorted by duration descending, and each goes to
/// the split with the largest remaining deficit relative to its target
/// duration. Ties break toward train, then validation. Disjointness holds by
/// construction since components never split.
inline SplitAssignment assign_splits(const std::vector<Component>& components,
                                     const std::array<double, 3>& ratios, Rng& rng,
                                     std::vector<std::string>* warnings = nullptr) {
  double ratio_sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0) throw InputError("assign_splits: ratios must be >= 0");
    ratio_sum += r;
  }
  if (std::fabs(ratio_sum - 1.0) > 1e-9)
    throw InputError("assign_splits: ratios must sum to 1");
  if (warnings && components.size() < 3)
    warnings->push_back("only " + std::to_string(components.size()) +
                        " speaker components; some splits will be empty");

  std::vector<std::size_t> order(components.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.next_index(i)]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return components[a].duration_s > components[b].duration_s;
  });

  double total = 0.0;
  for (const auto& c : components) total += c.duration_s;
  std::array<double, 3> target{};
  for (int i = 0; i < 3; ++i) target[static_cast<std::size_t>(i)] = ratios[static_cast<std::size_t>(i)] * total;

  SplitAssignment out;
  std::array<double, 3> assigned{};
  std::array<std::set<std::string>, 3> speakers;
  for (std::size_t idx : order) {
    const Component& comp = components[idx];
    int best = 0;
    double best_deficit = -1e300;
    for (int i = 0; i < 3; ++i) {
      const auto u = static_cast<std::size_t>(i);
      if (target[u] <= 0.0) continue;  // zero-ratio split gets nothing
      const double deficit = (target[u] - assigned[u]) / target[u];
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = i;
      }
    }
    const auto b = static_cast<std::size_t>(best);
    assigned[b] += comp.duration_s;
    out.totals[b].n_conversations += comp.conversation_ids.size();
    out.totals[b].duration_s += comp.duration_s;
    for (const auto& s : comp.speakers) speakers[b].insert(s);
    for (const auto& id : comp.conversation_ids)
      out.by_conversation[id] = static_cast<Split>(best);
  }
  for (int i = 0; i < 3; ++i)
    out.totals[static_cast<std::size_t>(i)].n_speakers = speakers[static_cast<std::size_t>(i)].size();
  return out;
}

struct DisjointReport {
  /// Speakers appearing in more than one split, with the splits they touch.
  std::vector<std::pair<std::string, std::vector<Split>>> violations;
  std::array<double, 3> achieved_ratios{};
  std::array<double, 3> ratio_deltas{};  // achieved - target
};

/// Re-derives speaker/duration bookkeeping from scratch and reports any
/// speaker shared across splits. Verification never throws; an unassigned
/// conversation is itself reported as a violation under its speakers.
inline DisjointReport verify_disjoint(const SplitAssignment& assignment,
                                      const std::vector<ConversationInfo>& conversations,
                                      const std::array<double, 3>& target_ratios) {
  DisjointReport report;
  std::map<std::string, std::set<int>> speaker_splits;
  std::array<double, 3> dur{};
  double total = 0.0;
  for (const auto& c : conversations) {
    auto it = assignment.by_conversation.find(c.id);
    const int split = it == assignment.by_conversation.end()
                          ? -1
                          : static_cast<int>(it->second);
    for (const auto& s : c.speakers) speaker_splits[s].insert(split);
    if (split >= 0) dur[static_cast<std::size_t>(split)] += c.duration_s;
    total += c.duration_s;
  }
  for (const auto& [spk, splits] : speaker_splits) {
    if (splits.size() < 2) continue;
    std::vector<Split> touched;
    for (int s : splits)
      if (s >= 0) touched.push_back(static_cast<Split>(s));
    report.violations.emplace_back(spk, std::move(touched));
  }
  for (int i = 0; i < 3; ++i) {
    const auto u = static_cast<std::size_t>(i);
    report.achieved_ratios[u] = total > 0.0 ? dur[u] / total : 0.0;
    report.ratio_deltas[u] = report.achieved_ratios[u] - target_ratios[u];
  }
  return report;
}

/// `conversation_id<TAB>split` lines (sorted by id) followed by a commented
/// summary block of per-split totals.
inline std::string emit_split_manifest(const SplitAssignment& assignment) {
  std::string out;
  for (const auto& [id, split] : assignment.by_conversation)
    out += id + "\t" + split_name(split) + "\n";
  char line[160];
  out += "# split\tspeakers\tconversations\thours\n";
  for (int i = 0; i < 3; ++i) {
    const auto& t = assignment.totals[static_cast<std::size_t>(i)];
    std::snprintf(line, sizeof(line), "# %s\t%zu\t%zu\t%.2f\n",
                  split_name(static_cast<Split>(i)), t.n_speakers,
                  t.n_conversations, t.duration_s / 3600.0);
    out += line;
  }
  return out;
}

}  // namespace convsim

#endif  // CONVSIM_SPLITS_HPP_
