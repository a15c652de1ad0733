// tools/convsim_main.cpp

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

// Command-line front end for the conversation simulation pipeline.
//
// Subcommands: stats, generate, split, segment, score {wer|cpwer|segacc|der},
// rir-rank. One JSON config (via --config or $CONVSIM_CONFIG) drives a run;
// a few flags override it. Exit codes: 0 success, 2 input error, 3 infeasible
// generation, 4 more than 5% of a batch failed.

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "convsim/error.hpp"
#include "convsim/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitBatchFailures = 4;

convsim::PipelineConfig config_or_default(const std::string& path) {
  if (path.empty()) return convsim::PipelineConfig{};
  return convsim::load_pipeline_config(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker-aware simulated conversation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("-c,--config", config_path, "Pipeline config JSON")
      ->envname("CONVSIM_CONFIG");

  CLI::App* cmd_stats = app.add_subcommand(
      "stats", "Fit pause distributions and the turn model from a segment manifest");
  bool no_compress = false;
  cmd_stats->add_flag("--no-compress", no_compress,
                      "Skip long-pause compression before fitting");

  CLI::App* cmd_generate =
      app.add_subcommand("generate", "Plan and render a conversation batch");
  std::size_t n_conversations = 0;
  cmd_generate->add_option("-n,--count", n_conversations, "Conversations to generate")
      ->required();
  int workers_override = 0;
  cmd_generate->add_option("--workers", workers_override, "Worker thread count");
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  cmd_generate->add_option("--seed", seed_override, "Master seed override")
      ->each([&](const std::string&) { seed_given = true; });

  CLI::App* cmd_split =
      app.add_subcommand("split", "Assign conversations to speaker-disjoint subsets");
  CLI::App* cmd_segment =
      app.add_subcommand("segment", "Cut conversations into clips with SOT transcripts");

  CLI::App* cmd_score = app.add_subcommand("score", "Score hypotheses against references");
  std::string task;
  cmd_score->add_option("task", task, "One of wer, cpwer, segacc, der")
      ->required()
      ->check(CLI::IsMember({"wer", "cpwer", "segacc", "der"}));
  std::string ref_path, hyp_path;
  cmd_score->add_option("--ref", ref_path, "Reference manifest or RTTM")->required();
  cmd_score->add_option("--hyp", hyp_path, "Hypothesis manifest or RTTM")->required();
  double collar_override = -1.0;
  cmd_score->add_option("--collar", collar_override,
                        "DER collar in seconds around reference boundaries");
  bool no_score_overlap = false;
  cmd_score->add_flag("--no-score-overlap", no_score_overlap,
                      "Exclude reference overlap regions from DER");

  CLI::App* cmd_rank =
      app.add_subcommand("rir-rank", "Rank each room's sources by realism score");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    convsim::PipelineConfig config = config_or_default(config_path);
    if (cmd_stats->parsed()) {
      if (no_compress) config.compress = false;
      convsim::run_stats(config, std::cout);
      return kExitOk;
    }
    if (cmd_generate->parsed()) {
      if (workers_override > 0) config.workers = workers_override;
      if (seed_given) config.sim.master_seed = seed_override;
      const convsim::GenerateResult result =
          convsim::run_generate(config, n_conversations, std::cout);
      return result.over_failure_threshold() ? kExitBatchFailures : kExitOk;
    }
    if (cmd_split->parsed()) {
      convsim::run_split(config, std::cout);
      return kExitOk;
    }
    if (cmd_segment->parsed()) {
      convsim::run_segment(config, std::cout);
      return kExitOk;
    }
    if (cmd_score->parsed()) {
      if (collar_override >= 0.0) config.collar_s = collar_override;
      if (no_score_overlap) config.score_overlap = false;
      if (task == "der")
        convsim::run_score_der(config, ref_path, hyp_path, std::cout);
      else
        convsim::run_score_text(config, task, ref_path, hyp_path, std::cout);
      return kExitOk;
    }
    if (cmd_rank->parsed()) {
      convsim::run_rir_rank(config, std::cout);
      return kExitOk;
    }
  } catch (const convsim::InfeasibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const convsim::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOk;
}
