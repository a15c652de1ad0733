// convsim/pipeline.hpp

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

// Batch pipeline: configured, resumable drivers behind the CLI subcommands.
//
// One JSON config file is the single source of truth for a run; every command
// validates the inputs it needs before writing anything and archives the
// config into the output directory. Generation fans conversations out to a
// worker pool — conversations are planned/rendered as pure functions of
// (inputs, per-index seed), all files are written atomically, and a rerun
// skips conversations whose outputs already exist, so parallel, resumed, and
// serial runs produce byte-identical results.

#ifndef CONVSIM_PIPELINE_HPP_
#define CONVSIM_PIPELINE_HPP_

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "convsim/acoustics.hpp"
#include "convsim/audio.hpp"
#include "convsim/corpus.hpp"
#include "convsim/error.hpp"
#include "convsim/jsonl.hpp"
#include "convsim/metrics.hpp"
#include "convsim/segmenter.hpp"
#include "convsim/simulate.hpp"
#include "convsim/splits.hpp"
#include "convsim/stats.hpp"
#include "convsim/stats_doc.hpp"
#include "convsim/turns.hpp"

namespace convsim {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Per-conversation SNR source: a fixed value, a uniform range, or a fitted
/// kernel density, matching how pause distributions are specified.
struct SnrSpec {
  enum class Kind { kNone, kFixed, kUniform, kKde };
  Kind kind = Kind::kNone;
  double fixed_db = 20.0;
  double min_db = 0.0, max_db = 0.0;
  std::vector<double> support;
  double bandwidth = 0.0;

  SnrSampler sampler() const {
    switch (kind) {
      case Kind::kNone:
        return nullptr;
      case Kind::kFixed:
        return [v = fixed_db](Rng&) { return v; };
      case Kind::kUniform:
        return [lo = min_db, hi = max_db](Rng& rng) {
          return lo + (hi - lo) * rng.next_double();
        };
      case Kind::kKde: {
        auto kde = std::make_shared<GapKde>(support, bandwidth);
        return [kde](Rng& rng) { return kde->sample(rng); };
      }
    }
    return nullptr;
  }
};

struct PipelineConfig {
  std::string corpus_manifest;
  std::string segment_manifest;
  std::string rir_manifest;   // optional; empty renders dry
  std::string noise_manifest; // optional unless sim.noise_enabled
  std::string output_dir = "out";

  SimConfig sim;
  SnrSpec snr;

  // stats fitting
  bool compress = true;
  double knee_s = 2.0;
  double exponent = 0.5;
  int markov_order = 1;
  double alpha = 0.1;
  double min_duration_s = 2.0;
  double max_duration_s = 10.0;
  std::optional<double> mean_bandwidth;
  std::optional<double> dev_bandwidth;

  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
  std::uint64_t split_seed = 0;
  double max_clip_s = 30.0;
  double collar_s = 0.0;
  bool score_overlap = true;
  int workers = 4;

  std::string raw_json;  // original file content, archived with outputs

  std::string stats_path() const { return output_dir + "/stats.json"; }
  std::string batch_manifest_path() const { return output_dir + "/conversations.jsonl"; }
  std::string conversations_dir() const { return output_dir + "/conversations"; }
  std::string clips_dir() const { return output_dir + "/clips"; }
};

namespace pipeline_detail {

inline double opt_num(const Json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

}  // namespace pipeline_detail

inline PipelineConfig parse_pipeline_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("config: bad JSON: ") + e.what());
  }
  PipelineConfig c;
  c.raw_json = text;
  c.corpus_manifest = j.value("corpus_manifest", std::string());
  c.segment_manifest = j.value("segment_manifest", std::string());
  c.rir_manifest = j.value("rir_manifest", std::string());
  c.noise_manifest = j.value("noise_manifest", std::string());
  c.output_dir = j.value("output_dir", std::string("out"));
  c.workers = j.value("workers", 4);
  if (c.workers < 1) throw InputError("config: workers must be >= 1");

  if (j.contains("sim")) {
    const Json& s = j["sim"];
    c.sim.n_spk = s.value("n_spk", 2);
    c.sim.n_utterances_min = s.value("n_utterances_min", 10);
    c.sim.n_utterances_max = s.value("n_utterances_max", c.sim.n_utterances_min);
    c.sim.min_utts_per_speaker = s.value("min_utts_per_speaker", 2);
    c.sim.noise_enabled = s.value("noise_enabled", false);
    c.sim.realism_fraction = s.value("realism_fraction", 0.4);
    c.sim.min_azimuth_sep_deg = s.value("min_azimuth_sep_deg", 20.0);
    c.sim.sample_rate_hz = s.value("sample_rate_hz", 16000);
    c.sim.master_seed = s.value("master_seed", std::uint64_t{0});
    if (s.contains("snr_db")) {
      const Json& snr = s["snr_db"];
      if (snr.is_number()) {
        c.snr.kind = SnrSpec::Kind::kFixed;
        c.snr.fixed_db = snr.get<double>();
      } else if (snr.is_array() && snr.size() == 2) {
        c.snr.kind = SnrSpec::Kind::kUniform;
        c.snr.min_db = snr[0].get<double>();
        c.snr.max_db = snr[1].get<double>();
        if (c.snr.max_db < c.snr.min_db)
          throw InputError("config: snr_db range must be [min, max]");
      } else if (snr.is_object()) {
        c.snr.kind = SnrSpec::Kind::kKde;
        for (const auto& v : snr.at("support")) c.snr.support.push_back(v.get<double>());
        c.snr.bandwidth = snr.at("bandwidth").get<double>();
      } else {
        throw InputError("config: snr_db must be a number, [min,max], or "
                         "{support, bandwidth}");
      }
    }
  }
  c.sim.validate();

  if (j.contains("stats")) {
    const Json& s = j["stats"];
    c.compress = s.value("compress", true);
    c.knee_s = pipeline_detail::opt_num(s, "knee_s", 2.0);
    c.exponent = pipeline_detail::opt_num(s, "exponent", 0.5);
    c.markov_order = s.value("markov_order", 1);
    c.alpha = pipeline_detail::opt_num(s, "alpha", 0.1);
    c.min_duration_s = pipeline_detail::opt_num(s, "min_duration_s", 2.0);
    c.max_duration_s = pipeline_detail::opt_num(s, "max_duration_s", 10.0);
    if (s.contains("mean_bandwidth")) c.mean_bandwidth = s["mean_bandwidth"].get<double>();
    if (s.contains("dev_bandwidth")) c.dev_bandwidth = s["dev_bandwidth"].get<double>();
  }
  if (j.contains("splits")) {
    const Json& s = j["splits"];
    if (s.contains("ratios")) {
      if (!s["ratios"].is_array() || s["ratios"].size() != 3)
        throw InputError("config: splits.ratios must be [train, validation, test]");
      for (int i = 0; i < 3; ++i)
        c.split_ratios[static_cast<std::size_t>(i)] = s["ratios"][static_cast<std::size_t>(i)].get<double>();
    }
    c.split_seed = s.value("seed", std::uint64_t{0});
  }
  if (j.contains("segmenter"))
    c.max_clip_s = pipeline_detail::opt_num(j["segmenter"], "max_clip_s", 30.0);
  if (j.contains("metrics")) {
    c.collar_s = pipeline_detail::opt_num(j["metrics"], "collar_s", 0.0);
    c.score_overlap = j["metrics"].value("score_overlap", true);
  }
  return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw InputError("config file not found: " + path);
  return parse_pipeline_config(read_file(path));
}

namespace pipeline_detail {

inline void require_path(const std::string& path, const char* what) {
  if (path.empty()) throw InputError(std::string("config: ") + what + " not set");
  if (!std::filesystem::exists(path))
    throw InputError(std::string(what) + " not found: " + path);
}

inline void prepare_output_dir(const PipelineConfig& config) {
  std::filesystem::create_directories(config.output_dir);
  if (!config.raw_json.empty())
    write_file_atomic(config.output_dir + "/config_used.json", config.raw_json);
}

inline std::vector<RirEntry> load_rir_manifest(const std::string& path) {
  std::vector<RirEntry> db;
  for_each_jsonl(path, [&](const Json& rec, int line_no) {
    const std::string ctx = path + ":" + std::to_string(line_no);
    RirEntry e;
    e.room_id = field_str(rec, "room_id", ctx);
    e.source_id = field_str(rec, "source_id", ctx);
    e.mic_id = field_str(rec, "mic_id", ctx);
    e.height_m = field_num(rec, "height_m", ctx);
    e.distance_m = field_num(rec, "distance_m", ctx);
    e.elevation_deg = field_num(rec, "elevation_deg", ctx);
    e.azimuth_deg = field_num(rec, "azimuth_deg", ctx);
    e.ir_path = field_str(rec, "ir_path", ctx);
    db.push_back(std::move(e));
  });
  if (db.empty()) throw InputError("rir manifest is empty: " + path);
  return db;
}

inline std::vector<std::string> load_noise_manifest(const std::string& path) {
  std::vector<std::string> out;
  for_each_jsonl(path, [&](const Json& rec, int line_no) {
    out.push_back(field_str(rec, "audio_path", path + ":" + std::to_string(line_no)));
  });
  if (out.empty()) throw InputError("noise manifest is empty: " + path);
  return out;
}

inline std::vector<SegmentRecord> load_segment_manifest(const std::string& path) {
  std::vector<SegmentRecord> out;
  for_each_jsonl(path, [&](const Json& rec, int line_no) {
    const std::string ctx = path + ":" + std::to_string(line_no);
    SegmentRecord r;
    r.conversation_id = field_str(rec, "conversation_id", ctx);
    r.speaker = field_str(rec, "speaker_id", ctx);
    r.onset_s = field_num(rec, "onset_s", ctx);
    r.offset_s = field_num(rec, "offset_s", ctx);
    out.push_back(std::move(r));
  });
  if (out.empty()) throw InputError("segment manifest is empty: " + path);
  return out;
}

}  // namespace pipeline_detail

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

/// Fits the pause distributions and turn model from a speech-segment manifest
/// and writes the stats document. Conversations with more distinct speakers
/// than sim.n_spk are skipped for the turn model (their gaps still count).
inline StatsDoc run_stats(const PipelineConfig& config, std::ostream& out) {
  using namespace pipeline_detail;
  require_path(config.segment_manifest, "segment_manifest");
  prepare_output_dir(config);

  const std::vector<SegmentRecord> segments =
      load_segment_manifest(config.segment_manifest);
  GapSamples gaps = extract_gaps(segments);
  if (config.compress) gaps = compress_pauses(gaps, config.knee_s, config.exponent);

  std::vector<std::string> warnings;
  MeanPauseModel pauses = fit_pause_models(gaps, config.mean_bandwidth,
                                           config.dev_bandwidth, &warnings);

  std::map<std::string, std::vector<std::string>> conv_speakers;
  std::vector<std::string> conv_order;
  for (const auto& s : segments) {
    auto [it, inserted] = conv_speakers.try_emplace(s.conversation_id);
    if (inserted) conv_order.push_back(s.conversation_id);
    it->second.push_back(s.speaker);
  }
  std::vector<std::vector<int>> sequences;
  for (const auto& id : conv_order) {
    std::vector<int> slots = to_slot_sequence(conv_speakers[id]);
    const int max_slot = *std::max_element(slots.begin(), slots.end());
    if (max_slot >= config.sim.n_spk) {
      warnings.push_back("conversation " + id + " has " +
                         std::to_string(max_slot + 1) +
                         " speakers; skipped for the turn model");
      continue;
    }
    if (static_cast<int>(slots.size()) < config.markov_order + 1) {
      warnings.push_back("conversation " + id + " too short for order " +
                         std::to_string(config.markov_order) + "; skipped");
      continue;
    }
    sequences.push_back(std::move(slots));
  }
  if (sequences.empty())
    throw InputError("run_stats: no conversation usable for the turn model");
  TurnModel turn_model = estimate_turn_model(sequences, config.markov_order,
                                             config.sim.n_spk, config.alpha);

  std::size_t n_same = 0;
  for (const auto& g : gaps.items) n_same += g.same_speaker ? 1u : 0u;
  const GapKde pooled = GapKde::fit(gaps.values());
  StatsDoc doc{config.compress, config.knee_s,    config.exponent,
               std::move(pauses), std::move(turn_model), pooled.p_overlap(),
               n_same,            gaps.items.size() - n_same};
  save_stats_doc(config.stats_path(), doc);

  for (const auto& w : warnings) out << "warning: " << w << "\n";
  out << "gaps: " << gaps.items.size() << " (" << doc.n_gaps_same << " same, "
      << doc.n_gaps_diff << " change)\n"
      << "pooled p_overlap: " << doc.pooled_p_overlap << "\n"
      << "turn model: order " << doc.turn_model.order() << ", "
      << doc.turn_model.n_slots() << " slots\n"
      << "stats document: " << config.stats_path() << "\n";
  return doc;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateResult {
  std::size_t n_requested = 0;
  std::size_t n_rendered = 0;
  std::size_t n_resumed = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // id -> error

  bool over_failure_threshold() const {
    return static_cast<double>(failures.size()) >
           0.05 * static_cast<double>(n_requested);
  }
};

/// Plans and renders a batch. Workers pull conversation indexes from a shared
/// counter; every output (wav, rttm, meta) is written atomically, and indexes
/// whose three outputs already exist are skipped, which makes interrupted
/// batches resumable. The batch manifest is rebuilt from the meta files on
/// disk so fresh and resumed runs emit identical bytes.
inline GenerateResult run_generate(const PipelineConfig& config,
                                   std::size_t n_conversations, std::ostream& out) {
  using namespace pipeline_detail;
  require_path(config.corpus_manifest, "corpus_manifest");
  require_path(config.stats_path(), "stats document (run `stats` first)");
  if (!config.rir_manifest.empty()) require_path(config.rir_manifest, "rir_manifest");
  if (config.sim.noise_enabled) {
    require_path(config.noise_manifest, "noise_manifest");
    if (config.snr.kind == SnrSpec::Kind::kNone)
      throw InputError("config: sim.noise_enabled needs sim.snr_db");
  }
  prepare_output_dir(config);
  std::filesystem::create_directories(config.conversations_dir());

  const Corpus corpus = filter_by_duration(load_manifest(config.corpus_manifest),
                                           config.min_duration_s, config.max_duration_s);
  const auto candidates =
      eligible_speaker_sets(corpus, config.sim.n_spk, config.sim.min_utts_per_speaker);
  if (candidates.empty())
    throw InfeasibleError("no eligible speaker set: need " +
                          std::to_string(config.sim.n_spk) + " speakers sharing a "
                          "book with >= " +
                          std::to_string(config.sim.min_utts_per_speaker) +
                          " utterances each in [" + std::to_string(config.min_duration_s) +
                          ", " + std::to_string(config.max_duration_s) + "] s");
  const StatsDoc doc = load_stats_doc(config.stats_path());
  const PauseSamplerSet pauses = PauseSamplerSet::from_model(doc.pauses);
  const std::vector<RirEntry> rir_db =
      config.rir_manifest.empty() ? std::vector<RirEntry>{}
                                  : load_rir_manifest(config.rir_manifest);
  const std::vector<std::string> noise_paths =
      config.sim.noise_enabled ? load_noise_manifest(config.noise_manifest)
                               : std::vector<std::string>{};
  const SnrSampler snr = config.snr.sampler();

  GenerateResult result;
  result.n_requested = n_conversations;
  std::atomic<std::size_t> next{0};
  std::mutex mu;

  auto work = [&]() {
    for (;;) {
      const std::size_t index = next.fetch_add(1);
      if (index >= n_conversations) return;
      const std::string id = conversation_id_for(index);
      const std::string base = config.conversations_dir() + "/" + id;
      if (std::filesystem::exists(base + ".wav") &&
          std::filesystem::exists(base + ".rttm") &&
          std::filesystem::exists(base + ".meta")) {
        std::lock_guard<std::mutex> lock(mu);
        ++result.n_resumed;
        continue;
      }
      try {
        const ConversationPlan plan =
            plan_conversation(corpus, candidates, pauses, doc.turn_model,
                              config.sim, index, rir_db, noise_paths, snr);
        const ConversationArtifacts art = render_conversation(
            plan, corpus, default_audio_loader, config.sim.sample_rate_hz);

        Json meta;
        meta["conversation_id"] = plan.conversation_id;
        meta["book_id"] = plan.book_id;
        meta["speakers"] = plan.speakers;
        meta["seed"] = plan.seed;
        meta["room_id"] = plan.room_id;
        meta["rir_mode"] = plan.rirs.assignments.empty()
                               ? "none"
                               : (plan.rirs.mode == RirMode::kRealism ? "realism"
                                                                      : "uniform");
        Json assigns = Json::array();
        for (const auto& a : plan.rirs.assignments) {
          Json ja;
          ja["slot"] = a.speaker_slot;
          ja["source_id"] = a.entry.source_id;
          ja["mic_id"] = a.entry.mic_id;
          ja["ir_path"] = a.entry.ir_path;
          assigns.push_back(std::move(ja));
        }
        meta["rir_assignments"] = std::move(assigns);
        meta["min_sep_deg_used"] = plan.rirs.min_sep_deg_used;
        meta["sep_relaxed"] = plan.rirs.relaxed;
        if (plan.snr_db)
          meta["snr_db"] = *plan.snr_db;
        else
          meta["snr_db"] = nullptr;
        meta["noise_path"] = plan.noise_path;
        meta["clamp_count"] = plan.clamp_count;
        meta["warnings"] = plan.warnings;
        meta["peak_gain"] = art.peak_gain;
        meta["n_turns"] = plan.turns.size();
        meta["duration_s"] = static_cast<double>(art.waveform.size()) /
                             static_cast<double>(config.sim.sample_rate_hz);
        meta["audio_path"] = "conversations/" + id + ".wav";
        meta["rttm_path"] = "conversations/" + id + ".rttm";
        Json turns = Json::array();
        for (const auto& t : plan.turns) {
          Json jt;
          jt["index"] = t.index;
          jt["speaker_slot"] = t.speaker_slot;
          jt["speaker_id"] = plan.speakers[static_cast<std::size_t>(t.speaker_slot)];
          jt["utterance_id"] = t.utterance_id;
          jt["text"] = corpus.utterance(t.utterance_id).transcript;
          jt["gap_s"] = t.gap_s;
          jt["onset_s"] = t.onset_s;
          jt["offset_s"] = t.offset_s;
          jt["clamped"] = t.clamped;
          turns.push_back(std::move(jt));
        }
        meta["turns"] = std::move(turns);

        write_wav_f32(base + ".wav", art.waveform, config.sim.sample_rate_hz);
        write_file_atomic(base + ".rttm", art.rttm);
        write_file_atomic(base + ".meta", meta.dump(2) + "\n");
        std::lock_guard<std::mutex> lock(mu);
        ++result.n_rendered;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        result.failures.emplace_back(id, e.what());
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(config.workers,
                                                  static_cast<int>(n_conversations)));
  std::vector<std::thread> threads;
  for (int i = 0; i < n_workers; ++i) threads.emplace_back(work);
  for (auto& t : threads) t.join();

  std::sort(result.failures.begin(), result.failures.end());
  std::set<std::string> failed;
  for (const auto& [id, what] : result.failures) failed.insert(id);
  std::string manifest;
  for (std::size_t index = 0; index < n_conversations; ++index) {
    const std::string id = conversation_id_for(index);
    if (failed.count(id)) continue;
    const Json meta =
        Json::parse(read_file(config.conversations_dir() + "/" + id + ".meta"));
    manifest += meta.dump();
    manifest += "\n";
  }
  write_file_atomic(config.batch_manifest_path(), manifest);

  for (const auto& [id, what] : result.failures)
    out << "failed: " << id << ": " << what << "\n";
  out << "rendered " << result.n_rendered << ", resumed " << result.n_resumed
      << ", failed " << result.failures.size() << " of " << n_conversations
      << "\nbatch manifest: " << config.batch_manifest_path() << "\n";
  return result;
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

inline SplitAssignment run_split(const PipelineConfig& config, std::ostream& out) {
  using namespace pipeline_detail;
  require_path(config.batch_manifest_path(), "batch manifest (run `generate` first)");
  prepare_output_dir(config);

  std::vector<ConversationInfo> conversations;
  for_each_jsonl(config.batch_manifest_path(), [&](const Json& rec, int line_no) {
    const std::string ctx =
        config.batch_manifest_path() + ":" + std::to_string(line_no);
    ConversationInfo info;
    info.id = field_str(rec, "conversation_id", ctx);
    for (const auto& s : require_field(rec, "speakers", ctx))
      info.speakers.push_back(s.get<std::string>());
    info.duration_s = field_num(rec, "duration_s", ctx);
    conversations.push_back(std::move(info));
  });

  const std::vector<Component> components = build_components(conversations);
  std::vector<std::string> warnings;
  Rng rng(config.split_seed);
  const SplitAssignment assignment =
      assign_splits(components, config.split_ratios, rng, &warnings);
  const DisjointReport report =
      verify_disjoint(assignment, conversations, config.split_ratios);
  if (!report.violations.empty())
    throw Error("split produced " + std::to_string(report.violations.size()) +
                " disjointness violations (bug)");

  std::string text = emit_split_manifest(assignment);
  char line[128];
  for (int i = 0; i < 3; ++i) {
    std::snprintf(line, sizeof(line), "# %s ratio %.4f (target %.4f)\n",
                  split_name(static_cast<Split>(i)),
                  report.achieved_ratios[static_cast<std::size_t>(i)],
                  config.split_ratios[static_cast<std::size_t>(i)]);
    text += line;
  }
  write_file_atomic(config.output_dir + "/splits.tsv", text);

  for (const auto& w : warnings) out << "warning: " << w << "\n";
  out << components.size() << " speaker components, 0 violations\n";
  for (int i = 0; i < 3; ++i) {
    const auto& t = assignment.totals[static_cast<std::size_t>(i)];
    out << split_name(static_cast<Split>(i)) << ": " << t.n_speakers
        << " speakers, " << t.n_conversations << " conversations, "
        << t.duration_s / 3600.0 << " h\n";
  }
  out << "split manifest: " << config.output_dir + "/splits.tsv" << "\n";
  return assignment;
}

// ---------------------------------------------------------------------------
// segment
// ---------------------------------------------------------------------------

namespace pipeline_detail {

inline std::vector<TranscriptTurn> turns_from_meta(const Json& meta,
                                                   const std::string& ctx) {
  std::vector<TranscriptTurn> turns;
  for (const auto& jt : require_field(meta, "turns", ctx)) {
    TranscriptTurn t;
    t.speaker_id = field_str(jt, "speaker_id", ctx);
    t.text = field_str(jt, "text", ctx);
    t.onset_s = field_num(jt, "onset_s", ctx);
    t.offset_s = field_num(jt, "offset_s", ctx);
    turns.push_back(std::move(t));
  }
  return turns;
}

}  // namespace pipeline_detail

/// Cuts every rendered conversation into clips and writes the two dataset
/// variants: clip audio + clip manifest, and a full-length manifest.
inline std::size_t run_segment(const PipelineConfig& config, std::ostream& out) {
  using namespace pipeline_detail;
  require_path(config.batch_manifest_path(), "batch manifest (run `generate` first)");
  prepare_output_dir(config);
  std::filesystem::create_directories(config.clips_dir());

  std::string clip_manifest, full_manifest;
  std::size_t n_clips = 0;
  for_each_jsonl(config.batch_manifest_path(), [&](const Json& meta, int line_no) {
    const std::string ctx =
        config.batch_manifest_path() + ":" + std::to_string(line_no);
    const std::string conv_id = field_str(meta, "conversation_id", ctx);
    const std::vector<TranscriptTurn> turns = turns_from_meta(meta, ctx);
    const std::vector<Clip> clips =
        segment_conversation(conv_id, turns, config.max_clip_s);

    const WavData wav =
        read_wav(config.output_dir + "/" + field_str(meta, "audio_path", ctx));
    for (const auto& clip : clips) {
      if (clip.abs_offset_s - clip.abs_onset_s > config.max_clip_s + 1e-9)
        throw Error("clip " + clip.clip_id + " exceeds the duration cap (bug)");
      write_wav_f32(config.clips_dir() + "/" + clip.clip_id + ".wav",
                    cut_clip_audio(wav.samples, wav.sample_rate_hz, clip),
                    wav.sample_rate_hz);
    }
    clip_manifest += emit_clip_manifest(clips, [](const Clip& c) {
      return "clips/" + c.clip_id + ".wav";
    });
    n_clips += clips.size();

    Clip whole;
    whole.turns.reserve(turns.size());
    for (const auto& t : turns)
      whole.turns.push_back(ClipTurn{t.speaker_id, t.text, t.onset_s, t.offset_s,
                                     t.onset_s, t.offset_s});
    Json rec;
    rec["conversation_id"] = conv_id;
    rec["audio_path"] = meta.at("audio_path");
    rec["rttm_path"] = meta.at("rttm_path");
    rec["transcript_sot"] = format_sot(whole);
    rec["n_segments"] = clip_segment_count(whole);
    full_manifest += rec.dump();
    full_manifest += "\n";
  });
  write_file_atomic(config.output_dir + "/clips.jsonl", clip_manifest);
  write_file_atomic(config.output_dir + "/full.jsonl", full_manifest);

  out << n_clips << " clips -> " << config.output_dir << "/clips.jsonl; "
      << "full-length manifest -> " << config.output_dir << "/full.jsonl\n";
  return n_clips;
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

namespace pipeline_detail {

/// id -> transcript from a manifest holding either `transcript_sot` or
/// `transcript` keyed by `clip_id` or `conversation_id`.
inline std::map<std::string, std::string> load_transcripts(const std::string& path) {
  std::map<std::string, std::string> by_id;
  for_each_jsonl(path, [&](const Json& rec, int line_no) {
    const std::string ctx = path + ":" + std::to_string(line_no);
    std::string id;
    if (rec.contains("clip_id"))
      id = field_str(rec, "clip_id", ctx);
    else
      id = field_str(rec, "conversation_id", ctx);
    std::string text;
    if (rec.contains("transcript_sot"))
      text = field_str(rec, "transcript_sot", ctx);
    else
      text = field_str(rec, "transcript", ctx);
    if (!by_id.emplace(id, std::move(text)).second)
      throw InputError(ctx + ": duplicate id " + id);
  });
  if (by_id.empty()) throw InputError("no transcripts in " + path);
  return by_id;
}

inline std::vector<std::pair<std::string, std::pair<std::string, std::string>>>
pair_transcripts(const std::string& ref_path, const std::string& hyp_path) {
  const auto ref = load_transcripts(ref_path);
  const auto hyp = load_transcripts(hyp_path);
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> out;
  for (const auto& [id, rtext] : ref) {
    auto it = hyp.find(id);
    if (it == hyp.end())
      throw InputError("hypothesis manifest is missing id " + id);
    out.emplace_back(id, std::make_pair(rtext, it->second));
  }
  return out;
}

/// RTTM text split per recording (second field).
inline std::map<std::string, DiarTimeline> parse_rttm_by_recording(
    const std::string& text) {
  std::map<std::string, DiarTimeline> out;
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
    out[file].segments.push_back(DiarSegment{spk, onset, onset + dur});
  }
  for (const auto& [file, tl] : out) tl.validate();
  return out;
}

}  // namespace pipeline_detail

/// WER / cpWER / SegAcc over paired transcript manifests. Aggregates WER-type
/// scores as total errors over total reference words.
inline double run_score_text(const PipelineConfig& config, const std::string& task,
                             const std::string& ref_path, const std::string& hyp_path,
                             std::ostream& out) {
  using namespace pipeline_detail;
  (void)config;
  require_path(ref_path, "reference manifest");
  require_path(hyp_path, "hypothesis manifest");
  const auto pairs = pair_transcripts(ref_path, hyp_path);

  if (task == "segacc") {
    std::vector<std::pair<std::string, std::string>> texts;
    for (const auto& [id, rh] : pairs) texts.push_back(rh);
    const double acc = seg_acc(texts);
    out << "SegAcc " << acc << " over " << pairs.size() << " pairs\n";
    return acc;
  }

  long long errs = 0, ref_words = 0;
  bool any_approx = false;
  for (const auto& [id, rh] : pairs) {
    WordAlignment a;
    double rate = 0.0;
    if (task == "wer") {
      const WerResult r = wer(rh.first, rh.second);
      a = r.alignment;
      rate = r.rate;
    } else if (task == "cpwer") {
      const CpWerResult r = cpwer(rh.first, rh.second);
      a = r.alignment;
      rate = r.rate;
      any_approx = any_approx || r.approximate;
    } else {
      throw InputError("unknown scoring task: " + task);
    }
    errs += a.substitutions + a.insertions + a.deletions;
    ref_words += a.ref_len;
    out << id << " " << task << " " << rate << " (S " << a.substitutions << " I "
        << a.insertions << " D " << a.deletions << " / " << a.ref_len << ")\n";
  }
  if (ref_words == 0) throw InputError("reference manifests contain no words");
  const double aggregate = static_cast<double>(errs) / static_cast<double>(ref_words);
  out << "aggregate " << task << " " << aggregate << " over " << pairs.size()
      << " pairs" << (any_approx ? " (some permutations approximate)" : "") << "\n";
  return aggregate;
}

/// DER over paired RTTM files; recordings are matched by RTTM file id.
/// Prints per-recording rates, the time-weighted aggregate, and deciles of
/// the per-recording distribution.
inline double run_score_der(const PipelineConfig& config, const std::string& ref_path,
                            const std::string& hyp_path, std::ostream& out) {
  using namespace pipeline_detail;
  require_path(ref_path, "reference rttm");
  require_path(hyp_path, "hypothesis rttm");
  const auto refs = parse_rttm_by_recording(read_file(ref_path));
  auto hyps = parse_rttm_by_recording(read_file(hyp_path));
  if (refs.empty()) throw InputError("no SPEAKER lines in " + ref_path);

  double err_s = 0.0, total_s = 0.0;
  std::vector<double> rates;
  for (const auto& [file, ref_tl] : refs) {
    const DiarTimeline hyp_tl = hyps.count(file) ? hyps[file] : DiarTimeline{};
    const DerResult r = der(ref_tl, hyp_tl, config.collar_s, config.score_overlap);
    err_s += r.miss_s + r.falarm_s + r.confusion_s;
    total_s += r.total_ref_s;
    rates.push_back(r.der);
    out << file << " DER " << r.der << " (miss " << r.miss_s << " fa " << r.falarm_s
        << " conf " << r.confusion_s << " / " << r.total_ref_s << " s)\n";
  }
  const double aggregate = err_s / total_s;
  std::sort(rates.begin(), rates.end());
  out << "aggregate DER " << aggregate << " over " << rates.size()
      << " recordings\ndeciles:";
  for (int d = 0; d <= 10; ++d)
    out << " " << stats_detail::quantile_sorted(rates, static_cast<double>(d) / 10.0);
  out << "\n";
  return aggregate;
}

// ---------------------------------------------------------------------------
// rir-rank
// ---------------------------------------------------------------------------

/// Diagnostic listing: per room, sources ranked by their best microphone's
/// realism score (what realism-mode selection walks).
inline void run_rir_rank(const PipelineConfig& config, std::ostream& out) {
  using namespace pipeline_detail;
  require_path(config.rir_manifest, "rir_manifest");
  const std::vector<RirEntry> db = load_rir_manifest(config.rir_manifest);
  std::set<std::string> rooms;
  for (const auto& e : db) rooms.insert(e.room_id);
  for (const auto& room : rooms) {
    const auto sources = acoustics_detail::room_sources(db, room, RealismWeights{});
    std::vector<std::size_t> order(sources.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (sources[a].best_score != sources[b].best_score)
        return sources[a].best_score < sources[b].best_score;
      return sources[a].source_id < sources[b].source_id;
    });
    out << room << " (" << sources.size() << " sources)\n";
    for (std::size_t idx : order) {
      const auto& s = sources[idx];
      out << "  " << s.source_id << " score " << s.best_score << " azimuth "
          << s.azimuth_deg << " deg, " << s.entries.size() << " mics\n";
    }
  }
}

}  // namespace convsim

#endif  // CONVSIM_PIPELINE_HPP_
