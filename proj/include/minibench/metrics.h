// minibench/metrics.h

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

#ifndef MINIBENCH_METRICS_H_
#define MINIBENCH_METRICS_H_

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace minibench {

struct MetricValue {
  std::string metric_id;
  double value = 0.0;
  bool higher_is_better = true;
  std::string units;
  nlohmann::json ToJson() const;
};

// --- Recognition ---------------------------------------------------------

// Whitespace split, lowercased.
std::vector<std::string> TokenizeTranscript(std::string_view text);

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_length = 0;
  std::size_t errors() const { return substitutions + deletions + insertions; }
};

// Unit-cost Levenshtein alignment.
EditCounts AlignEdits(std::span<const std::string> ref, std::span<const std::string> hyp);

// errors / |ref|.  Throws InvalidArgument for an empty reference; use
// AlignEdits for the raw error count in that case.
double Wer(std::span<const std::string> ref, std::span<const std::string> hyp);

// Total errors over total reference tokens.
double CorpusWer(const std::vector<std::vector<std::string>> &refs,
                 const std::vector<std::vector<std::string>> &hyps);

// Throws InvalidArgument on a length mismatch or empty input.
double Accuracy(std::span<const int> labels, std::span<const int> predictions);

// --- Signal fidelity -----------------------------------------------------

inline constexpr double kSiSdrCapDb = 100.0;

// 10 log10(|a s|^2 / |a s - e|^2), a = <e, s> / |s|^2, clamped to +-cap.
// Throws InvalidArgument on a length mismatch or an all-zero reference.
double SiSdr(std::span<const double> estimate, std::span<const double> reference,
             double cap_db = kSiSdrCapDb);

// SiSdr(estimate) - SiSdr(mixture).
double SiSdri(std::span<const double> estimate, std::span<const double> mixture,
              std::span<const double> reference, double cap_db = kSiSdrCapDb);

// --- Rank statistics -----------------------------------------------------

/// Model ids with their ranks (1 is best).  Ranks may be fractional when
/// built from tied scores.
struct RankVector {
  std::vector<std::string> models;
  std::vector<double> ranks;

  // Ranks 1..n in the given order.
  static RankVector FromOrder(const std::vector<std::string> &order);
  // Average ranks; the highest score gets rank 1 when higher_is_better.
  static RankVector FromScores(const std::vector<std::string> &models,
                               const std::vector<double> &scores, bool higher_is_better = true);
  double RankOf(const std::string &model) const;
  bool HasTies() const;
};

// 1-based average ranks of `values` in ascending order.
std::vector<double> AverageRanks(std::span<const double> values);

double PearsonCorrelation(std::span<const double> x, std::span<const double> y);

// 1 - 6 sum d^2 / (n (n^2 - 1)) without ties, else Pearson on the ranks.
// Throws InvalidArgument if the model sets differ.
double SpearmanRho(const RankVector &a, const RankVector &b);

// --- Externally computed metrics -----------------------------------------

/// Where per-utterance perceptual scores come from.
///
///   {"command": "pesq_tool --wb"}  runs `<command> <ref.wav> <est.wav>` and
///                                  parses one number from stdout
///   {"sidecar": "scores.tsv"}      reads `utt_id<TAB>score` rows
///   {"builtin": "seg_snr"|"correlation"}
///                                  in-process signal proxies, for synthetic
///                                  runs where the real tools are absent
struct MetricPlugin {
  enum class Kind { kCommand, kSidecar, kBuiltin };
  Kind kind = Kind::kBuiltin;
  std::string metric_id;
  std::string command;
  std::filesystem::path sidecar;
  std::string builtin = "seg_snr";
  bool higher_is_better = true;

  static MetricPlugin FromJson(const std::string &metric_id, const nlohmann::json &j);
  nlohmann::json ToJson() const;
};

struct MetricItem {
  std::string utt_id;
  std::filesystem::path reference;
  std::filesystem::path estimate;
};

// Mean over items.  Throws Error naming the utterance on plugin failure or a
// missing sidecar row.  Command plugins run on up to `jobs` threads; the
// result does not depend on `jobs`.
MetricValue ExternalMetricMean(const MetricPlugin &plugin, const std::vector<MetricItem> &items,
                               int jobs = 1);

// Per-item scores in item order.
std::vector<double> ExternalMetricScores(const MetricPlugin &plugin,
                                         const std::vector<MetricItem> &items, int jobs = 1);

std::map<std::string, double> LoadSidecar(const std::filesystem::path &path);
double RunMetricCommand(const std::string &command, const std::filesystem::path &reference,
                        const std::filesystem::path &estimate);

// Pearson correlation of the waveforms mapped to [0, 1] as (1 + r) / 2.
double WaveCorrelationScore(std::span<const double> estimate, std::span<const double> reference);

}  // namespace minibench

#endif  // MINIBENCH_METRICS_H_
