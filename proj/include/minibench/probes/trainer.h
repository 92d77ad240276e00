// minibench/probes/trainer.h

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

#ifndef MINIBENCH_PROBES_TRAINER_H_
#define MINIBENCH_PROBES_TRAINER_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "minibench/common.h"
#include "minibench/probes/probe.h"

namespace minibench {

struct CurvePoint {
  int step = 0;
  double loss = 0.0;  // mean batch loss since the previous point
  std::optional<double> dev_metric;
};

struct TrainedProbe {
  Probe<float> probe;  // best checkpoint by dev metric, else the last
  std::vector<CurvePoint> curve;
  std::optional<double> best_dev_metric;
  int best_step = 0;
  std::size_t skipped_examples = 0;  // unalignable CTC items
  std::uint64_t seed = 0;
};

// Higher is better.
using DevMetricFn = std::function<double(const Probe<float> &)>;

/// Raised when the loss stops being finite.
class TrainingError : public Error {
 public:
  TrainingError(int step, double lr, double grad_norm);
  int step;
  double lr;
  double grad_norm;
};

// Deterministic for a given config (including its seed) and example list.
TrainedProbe TrainProbe(const ProbeConfig &config, const std::vector<ProbeExample> &train,
                        const DevMetricFn &dev = {});

// "step\tloss\tdev_metric" rows; a missing dev metric is written as "NA".
std::string CurveToTsv(const std::vector<CurvePoint> &curve);

}  // namespace minibench

#endif  // MINIBENCH_PROBES_TRAINER_H_
