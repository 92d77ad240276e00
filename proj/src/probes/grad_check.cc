// probes/grad_check.cc

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

#include "minibench/probes/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "minibench/rng.h"

namespace minibench {

using nlohmann::json;

namespace {

std::vector<std::size_t> PickEntries(std::size_t size, const GradCheckOptions &opts,
                                     const std::string &name) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  if (opts.max_entries_per_block == 0 || size <= opts.max_entries_per_block) return idx;
  Rng rng(Rng::Derive(opts.seed, name));
  rng.Shuffle(&idx);
  idx.resize(opts.max_entries_per_block);
  std::sort(idx.begin(), idx.end());
  return idx;
}

void Record(GradCheckBlock *block, double analytic, double numeric, const GradCheckOptions &opts) {
  const double abs_err = std::abs(analytic - numeric);
  const double denom = std::max({std::abs(analytic), std::abs(numeric), opts.abs_floor});
  block->max_rel_error = std::max(block->max_rel_error, abs_err / denom);
  block->max_abs_error = std::max(block->max_abs_error, abs_err);
  block->max_abs_analytic = std::max(block->max_abs_analytic, std::abs(analytic));
  block->max_abs_numeric = std::max(block->max_abs_numeric, std::abs(numeric));
  ++block->checked;
}

void Finish(GradCheckReport *report, GradCheckBlock block, const GradCheckOptions &opts) {
  block.passed = block.max_rel_error < opts.tolerance;
  report->max_rel_error = std::max(report->max_rel_error, block.max_rel_error);
  if (!block.passed) {
    report->passed = false;
    report->failures.push_back(block.name);
  }
  report->blocks.push_back(std::move(block));
}

}  // namespace

json GradCheckReport::ToJson() const {
  json b = json::array();
  for (const auto &blk : blocks) {
    b.push_back({{"name", blk.name},
                 {"checked", blk.checked},
                 {"max_rel_error", blk.max_rel_error},
                 {"max_abs_error", blk.max_abs_error},
                 {"max_abs_analytic", blk.max_abs_analytic},
                 {"max_abs_numeric", blk.max_abs_numeric},
                 {"passed", blk.passed}});
  }
  return {{"passed", passed}, {"max_rel_error", max_rel_error}, {"failures", failures},
          {"blocks", b}};
}

GradCheckReport GradCheckFunction(const std::string &name, const ScalarFunction &f,
                                  std::vector<double> x, const GradCheckOptions &opts) {
  std::vector<double> grad(x.size(), 0.0);
  f(x, &grad);
  GradCheckBlock block;
  block.name = name;
  for (std::size_t i : PickEntries(x.size(), opts, name)) {
    const double orig = x[i];
    x[i] = orig + opts.epsilon;
    const double up = f(x, nullptr);
    x[i] = orig - opts.epsilon;
    const double down = f(x, nullptr);
    x[i] = orig;
    Record(&block, grad[i], (up - down) / (2.0 * opts.epsilon), opts);
  }
  GradCheckReport report;
  Finish(&report, std::move(block), opts);
  return report;
}

GradCheckReport GradCheckProbe(Probe<double> *probe, const ProbeExample &example,
                               const GradCheckOptions &opts) {
  probe->ZeroGrad();
  probe->Loss(example, true);
  GradCheckReport report;
  for (Param<double> *p : probe->Params()) {
    const Mat<double> analytic = p->grad;
    GradCheckBlock block;
    block.name = p->name;
    for (std::size_t i : PickEntries(static_cast<std::size_t>(p->size()), opts, p->name)) {
      double &v = p->value.data()[i];
      const double orig = v;
      v = orig + opts.epsilon;
      const double up = probe->Loss(example, false);
      v = orig - opts.epsilon;
      const double down = probe->Loss(example, false);
      v = orig;
      Record(&block, analytic.data()[i], (up - down) / (2.0 * opts.epsilon), opts);
    }
    Finish(&report, std::move(block), opts);
  }
  probe->ZeroGrad();
  return report;
}

}  // namespace minibench
