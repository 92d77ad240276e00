// minibench/pipeline.h

// Copyright 2026  The minibench Authors
//
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

#ifndef MINIBENCH_PIPELINE_H_
#define MINIBENCH_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "minibench/common.h"
#include "minibench/corpus.h"
#include "minibench/cost_model.h"
#include "minibench/feature_cache.h"
#include "minibench/metrics.h"
#include "minibench/sampler.h"
#include "minibench/scoring.h"

namespace minibench {

/// One upstream representation under evaluation.
struct ModelSpec {
  std::string name;
  nlohmann::json extractor;  // native extractor spec, or null
  std::map<TaskKind, std::filesystem::path> caches;  // prebuilt cache roots
  std::optional<ArchSpec> arch;  // for cost accounting
  FrameRule frames;  // framing of prebuilt caches; extractors know their own
};

struct TaskSettings {
  TaskKind task = TaskKind::kAsr;
  std::optional<SynthSpec> synth;  // generate the corpus
  std::map<Split, std::filesystem::path> manifests;  // or use these
  SamplingPolicy sampling;
  nlohmann::json probe;  // ProbeConfig fields other than the data-derived ones
  double steps_full = 0.0;  // training steps of the full benchmark, for costs
};

struct CostSettings {
  std::vector<std::int64_t> upstream_schedule;    // upstream input lengths
  std::vector<std::int64_t> downstream_schedule;  // feature frames
  double backward_ratio = 2.0;
};

/// Everything a run depends on.  All stage seeds derive from `seed`.
struct RunConfig {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<TaskSettings> tasks;
  std::vector<ModelSpec> models;
  ScoringOptions scoring;
  std::map<std::string, MetricPlugin> metrics;  // "pesq", "stoi"
  double stoi_report_scale = 100.0;  // plugin output -> reported STOI
  std::optional<std::vector<std::string>> reference_ranking;
  std::optional<CostSettings> cost;
  nlohmann::json canonical;  // normalized config, seed applied
  std::filesystem::path base_dir;

  // Throws ConfigError on anything unusable, including unresolvable paths.
  static RunConfig FromJson(const nlohmann::json &j, const std::filesystem::path &base_dir,
                            std::optional<std::uint64_t> seed_override = std::nullopt);
  static RunConfig Load(const std::filesystem::path &path,
                        std::optional<std::uint64_t> seed_override = std::nullopt);

  std::uint64_t Hash() const;
  // {"config_hash", "seed", "version"}, embedded in every artifact.
  nlohmann::json Provenance() const;
  // "# minibench <version> config=<hash> seed=<seed>" for TSV artifacts.
  std::string TsvHeader() const;

  const TaskSettings &Task(TaskKind task) const;
  const ModelSpec &Model(const std::string &name) const;
  std::uint64_t StageSeed(std::string_view stage, std::string_view key) const;
};

/// Paths of a run directory.
struct RunLayout {
  std::filesystem::path root;

  std::filesystem::path CorpusDir(TaskKind t) const;
  std::filesystem::path SplitManifest(TaskKind t, Split s) const;  // synthesized
  std::filesystem::path SubsetManifest(TaskKind t) const;
  std::filesystem::path CacheDir(const std::string &model, TaskKind t, Split s) const;
  std::filesystem::path ProbeDir(const std::string &model, TaskKind t) const;
  std::filesystem::path EvalDir(const std::string &model, TaskKind t) const;
  std::filesystem::path File(const std::string &name) const { return root / name; }
};

/// A stage failed; the CLI maps this to exit code 3.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string &message)
      : Error(stage + ": " + message), stage(std::move(stage)) {}
  std::string stage;
};

struct StageContext {
  RunConfig config;
  RunLayout layout;
  int jobs = 1;
  std::vector<std::string> only_models;  // empty = all
  std::vector<TaskKind> only_tasks;      // empty = all
  std::function<void(const std::string &)> log;

  bool Wants(const std::string &model) const;
  bool Wants(TaskKind task) const;
  void Log(const std::string &message) const;
};

// Each stage reads the previous stages' artifacts from the run directory.
void RunSynth(const StageContext &ctx);
void RunSample(const StageContext &ctx);
void RunExtract(const StageContext &ctx);
void RunTrain(const StageContext &ctx);
void RunEval(const StageContext &ctx);
Leaderboard RunScore(const StageContext &ctx);
CostReport RunCost(const StageContext &ctx);
// synth -> sample -> extract -> train -> eval -> score -> cost, then the
// report.  A failure records failure.json and rethrows as StageError.
void RunAll(const StageContext &ctx);

// The manifest a stage reads for (task, split): the sampled subset for
// train, the configured or synthesized manifest otherwise.
Manifest LoadTaskManifest(const StageContext &ctx, TaskKind task, Split split);

// Text summary of a run directory: leaderboard, cost and storage tables and
// the rank changes.  Missing sections are marked absent.  Throws
// NotFoundError if the directory holds no artifacts.
std::string RenderReport(const std::filesystem::path &run_dir);

// Table-5-style storage table from storage.json.
std::string RenderStorage(const nlohmann::json &storage);

}  // namespace minibench

#endif  // MINIBENCH_PIPELINE_H_
