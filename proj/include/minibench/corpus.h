// minibench/corpus.h

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

#ifndef MINIBENCH_CORPUS_H_
#define MINIBENCH_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace minibench {

enum class TaskKind { kAsr, kSid, kSe, kSs };
enum class Split { kTrain, kDev, kTest };

std::string_view TaskKindName(TaskKind kind);  // "ASR", "SID", "SE", "SS"
TaskKind ParseTaskKind(std::string_view name);  // case-insensitive
std::string_view SplitName(Split split);        // "train", "dev", "test"
Split ParseSplit(std::string_view name);

/// One clip of a task manifest.
///
/// The `audio` reference is the signal the upstream model consumes (the noisy
/// clip for enhancement, the mixture for separation).  Task-specific
/// references ("clean", "noisy", "src1", "src2", "mix") live in `refs`.
/// Relative paths resolve against the manifest's directory.
struct Utterance {
  std::string id;
  std::string audio;
  int sample_rate = 16000;
  std::int64_t num_samples = 0;
  std::optional<std::string> speaker;
  std::optional<std::vector<std::string>> transcript;
  std::optional<double> score;  // stratification label
  Split split = Split::kTrain;
  std::map<std::string, std::string> refs;
  nlohmann::json extra = nlohmann::json::object();  // unknown keys, preserved
};

/// An ordered, validated list of utterances.
struct Manifest {
  std::vector<Utterance> utterances;
  // Optional leading {"_provenance": {...}} record written by the sampler.
  nlohmann::json provenance;
  std::filesystem::path base_dir;

  std::size_t size() const { return utterances.size(); }
  bool empty() const { return utterances.empty(); }
  const Utterance *Find(std::string_view id) const;
  std::filesystem::path Resolve(const std::string &ref) const;
};

// Fixed key order of the JSON-lines schema; other keys follow sorted.
inline constexpr const char *kRefKeys[] = {"clean", "noisy", "src1", "src2", "mix"};

// Throws InvalidArgument naming the utterance and field when a field required
// by `kind` is absent.
void ValidateForTask(const Utterance &utt, TaskKind kind);

// Parses JSON lines.  Blank lines are skipped.  Errors carry `source` and the
// 1-based line number.
Manifest ParseManifest(std::string_view text,
                       std::optional<TaskKind> kind = std::nullopt,
                       std::string_view source = "<manifest>");
Manifest LoadManifest(const std::filesystem::path &path,
                      std::optional<TaskKind> kind = std::nullopt);

nlohmann::ordered_json UtteranceToJson(const Utterance &utt);
std::string SerializeManifest(const Manifest &manifest);
void SaveManifest(const std::filesystem::path &path, const Manifest &manifest);

// Desk-scale substitute corpora.

struct SnrRange {
  double lo = 0.0;
  double hi = 25.0;
};

/// Parameters of a deterministic synthetic corpus for one task kind.
struct SynthSpec {
  TaskKind kind = TaskKind::kAsr;
  std::uint64_t seed = 0;
  int sample_rate = 16000;
  int num_train = 40;
  int num_dev = 10;
  int num_test = 10;
  int vocab_size = 6;       // ASR: distinct tokens
  int min_tokens = 2;       // ASR: tokens per utterance
  int max_tokens = 4;
  int num_speakers = 4;     // SID/SE/SS
  std::int64_t min_samples = 8000;
  std::int64_t max_samples = 12000;
  // SE: noisy-vs-clean SNR target; SS: source-1-vs-source-2 ratio.  Generated
  // strat scores are clamped into [edges.front(), edges.back()].
  std::vector<double> strata_edges = {0, 5, 10, 15, 20, 25};
  // SS only: when set, source 2 is scaled by this fixed linear gain instead of
  // targeting an SNR drawn from the edges, and the label is not clamped.
  std::optional<double> second_source_gain;
  // SS only: fixed power ratio of source 1 over source 2 in dB.
  std::optional<double> relative_gain_db;
  double amplitude = 0.3;  // peak level of each generated source
};

// Cap applied to SNR labels (and to SI-SDR in the metrics module).
inline constexpr double kSnrCapDb = 100.0;

void ValidateSynthSpec(const SynthSpec &spec);
nlohmann::json SynthSpecToJson(const SynthSpec &spec);
SynthSpec SynthSpecFromJson(const nlohmann::json &j);

struct SynthCorpus {
  Manifest train;
  Manifest dev;
  Manifest test;
};

// Writes audio files under `out_dir`/audio and the three split manifests as
// `out_dir`/{train,dev,test}.jsonl.  Fully determined by the spec.
SynthCorpus SynthesizeCorpus(const SynthSpec &spec,
                             const std::filesystem::path &out_dir);

// Segmental SNR in dB over 256-sample segments, each clamped to [-10, 35].
double SegmentalSnr(const std::vector<float> &clean,
                    const std::vector<float> &noisy);

// 10 log10(P(a) / P(b)), +kSnrCapDb when b is silent.
double PowerRatioDb(const std::vector<float> &a, const std::vector<float> &b);

}  // namespace minibench

#endif  // MINIBENCH_CORPUS_H_
