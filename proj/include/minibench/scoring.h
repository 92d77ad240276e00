// minibench/scoring.h

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

#ifndef MINIBENCH_SCORING_H_
#define MINIBENCH_SCORING_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "minibench/corpus.h"
#include "minibench/metrics.h"

namespace minibench {

// Raw metric keys, all on their reported scales:
//   "wer" (%), "acc" (%), "pesq", "stoi" (%), "si_sdri" (dB).

enum class StoiScale {
  kFraction,  // STOI / 100 before averaging with PESQ (default)
  kPercent,   // STOI as reported
};

struct ScoringOptions {
  StoiScale stoi_scale = StoiScale::kFraction;
  std::string baseline = "FBANK";

  nlohmann::json ToJson() const;
  static ScoringOptions FromJson(const nlohmann::json &j);
};

// One higher-is-better number per task: ASR 100 - WER, SID accuracy, SE mean
// of PESQ and STOI, SS SI-SDRi.  Throws InvalidArgument on a missing metric.
double ToSingleMetric(TaskKind task, const std::map<std::string, double> &raw,
                      const ScoringOptions &opts = {});

// (1000 / |T|) * sum_t (s_t - base_t) / (sota_t - base_t).  Throws
// InvalidArgument on a length mismatch or a zero denominator.
double NormalizedScore(const std::vector<double> &scores, const std::vector<double> &baseline,
                       const std::vector<double> &sota);

/// Complete per-task score table.
struct ScoreMatrix {
  std::vector<TaskKind> tasks;
  std::vector<std::string> models;
  std::vector<std::vector<double>> values;                 // [model][task]
  std::vector<std::map<std::string, double>> raw;          // optional, per model

  void Add(const std::string &model, const std::vector<double> &task_scores,
           std::map<std::string, double> raw_metrics = {});
};

struct LeaderboardEntry {
  std::string model;
  std::vector<double> task_scores;
  std::map<std::string, double> raw;
  double score = 0.0;
  double rank = 0.0;
  std::optional<double> rank_delta;  // reference rank - rank; positive moved up
};

struct Leaderboard {
  std::vector<TaskKind> tasks;
  std::string baseline;
  std::vector<std::string> sota;    // per task, best non-baseline model
  std::vector<LeaderboardEntry> entries;  // by score, descending
  std::vector<std::string> warnings;
  std::optional<double> spearman;   // vs the reference ranking, if given

  RankVector Ranking() const;
  std::string ToTsv() const;
  std::string ToText() const;
};

// Sorted by score descending with ties broken by model id; tied scores share
// their average rank.  Tasks where baseline and SOTA coincide are dropped
// from the score with a warning.  Throws InvalidArgument when the baseline is
// absent or no task remains.
Leaderboard BuildLeaderboard(const ScoreMatrix &matrix, const std::string &baseline,
                             const std::optional<std::vector<std::string>> &reference_order = {});

// "(↑ n)", "(↓ n)" or "" for no change.
std::string RankDeltaLabel(double delta);

}  // namespace minibench

#endif  // MINIBENCH_SCORING_H_
