// minibench/probes/ctc.h

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

#ifndef MINIBENCH_PROBES_CTC_H_
#define MINIBENCH_PROBES_CTC_H_

#include <span>
#include <vector>

#include "minibench/probes/tensor.h"

namespace minibench {

// Connectionist temporal classification over T x V frame log-probabilities.
// Computation is in log space and in double regardless of the input type.

struct CtcResult {
  double loss = 0.0;      // -log p(label | x); +inf when infeasible
  bool feasible = true;   // false if T is shorter than the label needs
  Mat<double> grad;       // d(loss)/d(log_probs), T x V; zero when infeasible
};

// Frames needed to emit `label`: its length plus one per adjacent repeat.
std::size_t CtcMinFrames(std::span<const int> label);

// Label ids must lie in [0, V) and differ from `blank`.  Throws
// InvalidArgument otherwise.
template <typename S>
CtcResult CtcLoss(const Mat<S> &log_probs, std::span<const int> label, int blank = 0,
                  bool want_grad = true);

// Best path: argmax per frame, merge repeats, drop blanks.
template <typename S>
std::vector<int> CtcGreedyDecode(const Mat<S> &log_probs, int blank = 0);

double LogAdd(double a, double b);

}  // namespace minibench

#endif  // MINIBENCH_PROBES_CTC_H_
