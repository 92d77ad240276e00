// minibench/probes/grad_check.h

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

#ifndef MINIBENCH_PROBES_GRAD_CHECK_H_
#define MINIBENCH_PROBES_GRAD_CHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "minibench/probes/probe.h"

namespace minibench {

struct GradCheckOptions {
  double epsilon = 1e-5;    // central difference step
  double tolerance = 1e-5;  // on the relative error
  // Relative error is |a - n| / max(|a|, |n|, abs_floor).
  double abs_floor = 1e-6;
  std::size_t max_entries_per_block = 0;  // 0 checks every entry
  std::uint64_t seed = 0;                 // picks the entries when capped
};

struct GradCheckBlock {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  double max_abs_analytic = 0.0;
  double max_abs_numeric = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckBlock> blocks;
  double max_rel_error = 0.0;
  bool passed = true;
  std::vector<std::string> failures;  // names of failing blocks

  nlohmann::json ToJson() const;
};

// f(x, grad) returns the value and, when grad is non-null, fills it.
using ScalarFunction = std::function<double(const std::vector<double> &, std::vector<double> *)>;

GradCheckReport GradCheckFunction(const std::string &name, const ScalarFunction &f,
                                  std::vector<double> x, const GradCheckOptions &opts = {});

// Checks every parameter block of the probe on one example.
GradCheckReport GradCheckProbe(Probe<double> *probe, const ProbeExample &example,
                               const GradCheckOptions &opts = {});

}  // namespace minibench

#endif  // MINIBENCH_PROBES_GRAD_CHECK_H_
