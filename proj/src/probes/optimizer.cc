// probes/optimizer.cc

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

#include "minibench/probes/optimizer.h"

#include <cmath>

#include "minibench/common.h"

namespace minibench {

using nlohmann::json;

void OptimizerOptions::Validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidArgument("optimizer: lr must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw InvalidArgument("optimizer: betas must be in [0, 1)");
  if (!(eps > 0.0)) throw InvalidArgument("optimizer: eps must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw InvalidArgument("optimizer: momentum must be in [0, 1)");
  if (!(clip_norm >= 0.0)) throw InvalidArgument("optimizer: clip_norm must be >= 0");
}

json OptimizerOptions::ToJson() const {
  json j;
  if (kind == Kind::kAdam) {
    j = {{"kind", "adam"}, {"lr", lr}, {"beta1", beta1}, {"beta2", beta2}, {"eps", eps}};
  } else {
    j = {{"kind", "sgd"}, {"lr", lr}, {"momentum", momentum}};
  }
  j["clip_norm"] = clip_norm;
  return j;
}

OptimizerOptions OptimizerOptions::FromJson(const json &j) {
  OptimizerOptions o;
  const std::string kind = j.value("kind", std::string("adam"));
  if (kind == "sgd") o.kind = Kind::kSgdMomentum;
  else if (kind != "adam") throw InvalidArgument("unknown optimizer '" + kind + "'");
  o.lr = j.value("lr", o.lr);
  o.beta1 = j.value("beta1", o.beta1);
  o.beta2 = j.value("beta2", o.beta2);
  o.eps = j.value("eps", o.eps);
  o.momentum = j.value("momentum", o.momentum);
  o.clip_norm = j.value("clip_norm", o.clip_norm);
  o.Validate();
  return o;
}

template <typename S>
double GradNorm(const std::vector<Param<S> *> &params) {
  double sum = 0.0;
  for (const auto *p : params) sum += p->grad.template cast<double>().squaredNorm();
  return std::sqrt(sum);
}

template <typename S>
void Optimizer<S>::Step(const std::vector<Param<S> *> &params) {
  if (first_.empty()) {
    for (const auto *p : params) {
      first_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
      second_.push_back(Mat<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (first_.size() != params.size()) throw InvalidArgument("optimizer: parameter list changed");
  ++t_;

  S scale = S(1);
  if (opts_.clip_norm > 0.0) {
    const double norm = GradNorm(params);
    if (norm > opts_.clip_norm) scale = static_cast<S>(opts_.clip_norm / norm);
  }
  const S lr = static_cast<S>(opts_.lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param<S> &p = *params[i];
    const Mat<S> g = p.grad * scale;
    if (opts_.kind == OptimizerOptions::Kind::kAdam) {
      const S b1 = static_cast<S>(opts_.beta1), b2 = static_cast<S>(opts_.beta2);
      first_[i] = b1 * first_[i] + (S(1) - b1) * g;
      second_[i] = b2 * second_[i] + (S(1) - b2) * g.cwiseProduct(g);
      const S c1 = static_cast<S>(1.0 - std::pow(opts_.beta1, t_));
      const S c2 = static_cast<S>(1.0 - std::pow(opts_.beta2, t_));
      const S eps = static_cast<S>(opts_.eps);
      p.value.array() -=
          lr * (first_[i].array() / c1) / ((second_[i].array() / c2).sqrt() + eps);
    } else {
      first_[i] = static_cast<S>(opts_.momentum) * first_[i] + g;
      p.value -= lr * first_[i];
    }
  }
}

template double GradNorm<float>(const std::vector<Param<float> *> &);
template double GradNorm<double>(const std::vector<Param<double> *> &);
template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace minibench
