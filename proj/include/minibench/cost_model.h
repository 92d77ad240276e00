// minibench/cost_model.h

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

#ifndef MINIBENCH_COST_MODEL_H_
#define MINIBENCH_COST_MODEL_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

namespace minibench {

// Analytic multiply-accumulate counts.  One MAC is one multiply-add; bias
// terms and nonlinearities are free.
//
//   linear     in * out * T
//   conv1d     in_ch * out_ch * kernel * T_out,  T_out = (T - kernel) / stride + 1
//   lstm       4 * hidden * (input + hidden) * T per direction
//   attention  (4 d^2 + 2 d ff) * T + 2 d T^2   (projections, feed-forward,
//              QK^T and attention-times-V)

struct LinearSpec {
  std::int64_t in = 0, out = 0;
};
struct Conv1dSpec {
  std::int64_t in_ch = 0, out_ch = 0, kernel = 1, stride = 1;
};
struct LstmSpec {
  std::int64_t input = 0, hidden = 0;
  bool bidirectional = false;
};
struct AttentionSpec {
  std::int64_t d_model = 0, ff_dim = 0, heads = 1;
};
using LayerSpec = std::variant<LinearSpec, Conv1dSpec, LstmSpec, AttentionSpec>;

/// Network as an ordered list of layers.
struct ArchSpec {
  std::string name;
  std::vector<LayerSpec> layers;
  double input_stride_ms = 0.0;  // informational

  // Throws InvalidArgument on a non-positive dimension.
  void Validate() const;
  // {"name", "input_stride_ms", "layers": [{"type": "linear"|"conv1d"|
  // "lstm"|"attention", ..., "repeat": n}]}; "repeat" expands in place.
  static ArchSpec FromJson(const nlohmann::json &j);
  nlohmann::json ToJson() const;
};

// Stacked BLSTM with a linear output layer, as used by the sequence probes.
ArchSpec BlstmProbeArch(std::int64_t input_dim, std::int64_t hidden, int layers,
                        std::int64_t outputs);

// MACs of one layer on T input frames; `frames_out` receives the output length.
double LayerMacs(const LayerSpec &layer, std::int64_t frames, std::int64_t *frames_out);

// Sum over utterances and layers.  Throws InvalidArgument on an empty schedule.
double ForwardMacs(const ArchSpec &arch, std::span<const std::int64_t> frame_schedule);

struct CostInputs {
  double upstream_macs = 0.0;     // per profiling pass
  double downstream_macs = 0.0;   // per profiling pass
  double steps_full = 0.0;        // training steps of the full benchmark
  double steps_mini = 0.0;        // training steps of the reduced benchmark
  double extraction_passes = 0.0; // upstream forward passes for feature caching
  double backward_ratio = 2.0;    // backward / forward operations

  void Validate() const;
};

// C_U S + C_D (1 + R) S: the upstream runs at every training step.
double CostFullBenchmark(const CostInputs &ci);
// C_U S_f + C_D (1 + R) S_m: the upstream runs once per cached item.
double CostMiniBenchmark(const CostInputs &ci);

struct CostRow {
  std::string model;
  std::vector<double> full;  // per task, in CostReport::tasks order
  std::vector<double> mini;
  double total_full = 0.0;
  double total_mini = 0.0;
  double reduction_pct = 0.0;  // 100 (1 - total_mini / total_full)
};

struct CostReport {
  std::vector<std::string> tasks;
  std::vector<CostRow> rows;

  // Throws InvalidArgument unless both maps cover exactly `tasks`.
  void AddRow(const std::string &model, const std::map<std::string, double> &full,
              const std::map<std::string, double> &mini);

  std::string ToTsv() const;
  std::string ToText() const;
};

double ReductionPercent(double full, double mini);

/// Range of true values a printed decimal stands for, e.g. "8.2E+16" ->
/// [8.15e16, 8.25e16].
struct Interval {
  double lo = 0.0, hi = 0.0;
  bool Overlaps(const Interval &o) const { return lo <= o.hi && o.lo <= hi; }
};
Interval PrintedInterval(std::string_view text);

}  // namespace minibench

#endif  // MINIBENCH_COST_MODEL_H_
