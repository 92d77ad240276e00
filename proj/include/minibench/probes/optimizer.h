// minibench/probes/optimizer.h

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

#ifndef MINIBENCH_PROBES_OPTIMIZER_H_
#define MINIBENCH_PROBES_OPTIMIZER_H_

#include <vector>

#include "json.hpp"
#include "minibench/probes/tensor.h"

namespace minibench {

struct OptimizerOptions {
  enum class Kind { kAdam, kSgdMomentum };
  Kind kind = Kind::kAdam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum = 0.9;
  double clip_norm = 0.0;  // global gradient norm limit; 0 disables

  void Validate() const;
  nlohmann::json ToJson() const;
  static OptimizerOptions FromJson(const nlohmann::json &j);
};

template <typename S>
double GradNorm(const std::vector<Param<S> *> &params);

template <typename S>
class Optimizer {
 public:
  explicit Optimizer(OptimizerOptions opts) : opts_(opts) { opts_.Validate(); }

  // Applies one update from the accumulated gradients.  The parameter list
  // must be the same, in the same order, on every call.
  void Step(const std::vector<Param<S> *> &params);
  int steps() const { return t_; }

 private:
  OptimizerOptions opts_;
  int t_ = 0;
  std::vector<Mat<S>> first_;
  std::vector<Mat<S>> second_;
};

}  // namespace minibench

#endif  // MINIBENCH_PROBES_OPTIMIZER_H_
