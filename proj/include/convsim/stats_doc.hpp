// convsim/stats_doc.hpp

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

// Serialized timing statistics: the four fitted pause distributions plus the
// turn-transition table, written as one versioned JSON document so that a
// fitting run and a later generation run agree on the exact model.

#ifndef CONVSIM_STATS_DOC_HPP_
#define CONVSIM_STATS_DOC_HPP_

#include <string>
#include <utility>
#include <vector>

#include "convsim/error.hpp"
#include "convsim/jsonl.hpp"
#include "convsim/stats.hpp"
#include "convsim/turns.hpp"

namespace convsim {

struct StatsDoc {
  static constexpr int kFormatVersion = 1;

  bool compressed = true;
  double knee_s = 2.0;
  double exponent = 0.5;
  MeanPauseModel pauses;
  TurnModel turn_model;
  // Informational summary, not consumed by generation.
  double pooled_p_overlap = 0.0;
  std::size_t n_gaps_same = 0;
  std::size_t n_gaps_diff = 0;
};

namespace stats_doc_detail {

inline Json kde_to_json(const GapKde& kde) {
  Json j;
  j["support"] = kde.support();
  j["bandwidth"] = kde.bandwidth();
  return j;
}

inline GapKde kde_from_json(const Json& j, const std::string& what) {
  if (!j.contains("support") || !j["support"].is_array() ||
      !j.contains("bandwidth"))
    throw InputError("stats document: " + what + " needs support[] and bandwidth");
  std::vector<double> support;
  for (const auto& v : j["support"]) support.push_back(v.get<double>());
  return GapKde(std::move(support), j["bandwidth"].get<double>());
}

}  // namespace stats_doc_detail

inline std::string stats_doc_to_json(const StatsDoc& doc) {
  using stats_doc_detail::kde_to_json;
  Json j;
  j["format_version"] = StatsDoc::kFormatVersion;
  j["compression"]["enabled"] = doc.compressed;
  j["compression"]["knee_s"] = doc.knee_s;
  j["compression"]["exponent"] = doc.exponent;
  j["pause_models"]["same_means"] = kde_to_json(doc.pauses.same_means);
  j["pause_models"]["diff_means"] = kde_to_json(doc.pauses.diff_means);
  j["pause_models"]["same_dev"] = kde_to_json(doc.pauses.same_dev);
  j["pause_models"]["diff_dev"] = kde_to_json(doc.pauses.diff_dev);
  j["turn_model"]["order"] = doc.turn_model.order();
  j["turn_model"]["n_slots"] = doc.turn_model.n_slots();
  j["turn_model"]["rows"] = doc.turn_model.rows();
  j["summary"]["pooled_p_overlap"] = doc.pooled_p_overlap;
  j["summary"]["n_gaps_same"] = doc.n_gaps_same;
  j["summary"]["n_gaps_diff"] = doc.n_gaps_diff;
  return j.dump(2) + "\n";
}

inline StatsDoc stats_doc_from_json(const std::string& text) {
  using stats_doc_detail::kde_from_json;
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("stats document: bad JSON: ") + e.what());
  }
  if (!j.contains("format_version") ||
      j["format_version"].get<int>() != StatsDoc::kFormatVersion)
    throw InputError("stats document: unsupported or missing format_version");
  for (const char* key : {"compression", "pause_models", "turn_model"})
    if (!j.contains(key))
      throw InputError(std::string("stats document: missing section ") + key);

  const Json& pm = j["pause_models"];
  const Json& tm = j["turn_model"];
  if (!tm.contains("order") || !tm.contains("n_slots") || !tm.contains("rows"))
    throw InputError("stats document: turn_model needs order, n_slots, rows");
  std::vector<std::vector<double>> rows;
  for (const auto& row : tm["rows"]) {
    std::vector<double> r;
    for (const auto& v : row) r.push_back(v.get<double>());
    rows.push_back(std::move(r));
  }

  StatsDoc doc{
      j["compression"].value("enabled", true),
      j["compression"].value("knee_s", 2.0),
      j["compression"].value("exponent", 0.5),
      MeanPauseModel{kde_from_json(pm.at("same_means"), "same_means"),
                     kde_from_json(pm.at("diff_means"), "diff_means"),
                     kde_from_json(pm.at("same_dev"), "same_dev"),
                     kde_from_json(pm.at("diff_dev"), "diff_dev")},
      TurnModel(tm["order"].get<int>(), tm["n_slots"].get<int>(), std::move(rows)),
      0.0, 0, 0};
  if (j.contains("summary")) {
    doc.pooled_p_overlap = j["summary"].value("pooled_p_overlap", 0.0);
    doc.n_gaps_same = j["summary"].value("n_gaps_same", std::size_t{0});
    doc.n_gaps_diff = j["summary"].value("n_gaps_diff", std::size_t{0});
  }
  return doc;
}

inline void save_stats_doc(const std::string& path, const StatsDoc& doc) {
  write_file_atomic(path, stats_doc_to_json(doc));
}

inline StatsDoc load_stats_doc(const std::string& path) {
  return stats_doc_from_json(read_file(path));
}

}  // namespace convsim

#endif  // CONVSIM_STATS_DOC_HPP_
