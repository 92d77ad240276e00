// probes/ctc.cc

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

#include "minibench/probes/ctc.h"

#include <cmath>
#include <limits>

#include "minibench/common.h"

namespace minibench {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::size_t CtcMinFrames(std::span<const int> label) {
  std::size_t n = label.size();
  for (std::size_t i = 1; i < label.size(); ++i)
    if (label[i] == label[i - 1]) ++n;
  return n;
}

template <typename S>
CtcResult CtcLoss(const Mat<S> &log_probs, std::span<const int> label, int blank,
                  bool want_grad) {
  const Eigen::Index T = log_probs.rows();
  const Eigen::Index V = log_probs.cols();
  if (blank < 0 || blank >= V) throw InvalidArgument("ctc: blank id out of range");
  for (int k : label)
    if (k < 0 || k >= V || k == blank) throw InvalidArgument("ctc: label id out of range");

  CtcResult r;
  if (want_grad) r.grad = Mat<double>::Zero(T, V);
  if (T == 0 || static_cast<std::size_t>(T) < CtcMinFrames(label)) {
    r.feasible = false;
    r.loss = std::numeric_limits<double>::infinity();
    return r;
  }

  // Extended sequence: blank, l1, blank, l2, ..., blank.
  const Eigen::Index S_ = 2 * static_cast<Eigen::Index>(label.size()) + 1;
  std::vector<int> ext(S_, blank);
  for (std::size_t i = 0; i < label.size(); ++i) ext[2 * i + 1] = label[i];
  auto skip_ok = [&](Eigen::Index s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };
  auto lp = [&](Eigen::Index t, Eigen::Index s) {
    return static_cast<double>(log_probs(t, ext[s]));
  };

  Mat<double> alpha = Mat<double>::Constant(T, S_, kNegInf);
  alpha(0, 0) = lp(0, 0);
  if (S_ > 1) alpha(0, 1) = lp(0, 1);
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index s = 0; s < S_; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = LogAdd(a, alpha(t - 1, s - 1));
      if (skip_ok(s)) a = LogAdd(a, alpha(t - 1, s - 2));
      if (a != kNegInf) alpha(t, s) = a + lp(t, s);
    }
  }
  double log_p = alpha(T - 1, S_ - 1);
  if (S_ > 1) log_p = LogAdd(log_p, alpha(T - 1, S_ - 2));
  r.loss = -log_p;
  if (!want_grad) return r;

  Mat<double> beta = Mat<double>::Constant(T, S_, kNegInf);
  beta(T - 1, S_ - 1) = lp(T - 1, S_ - 1);
  if (S_ > 1) beta(T - 1, S_ - 2) = lp(T - 1, S_ - 2);
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    for (Eigen::Index s = 0; s < S_; ++s) {
      double b = beta(t + 1, s);
      if (s + 1 < S_) b = LogAdd(b, beta(t + 1, s + 1));
      if (s + 2 < S_ && skip_ok(s + 2)) b = LogAdd(b, beta(t + 1, s + 2));
      if (b != kNegInf) beta(t, s) = b + lp(t, s);
    }
  }

  // Both alpha and beta include the emission at (t, s), so subtract it once.
  std::vector<double> occ(V);
  for (Eigen::Index t = 0; t < T; ++t) {
    std::fill(occ.begin(), occ.end(), kNegInf);
    for (Eigen::Index s = 0; s < S_; ++s) {
      if (alpha(t, s) == kNegInf || beta(t, s) == kNegInf) continue;
      occ[ext[s]] = LogAdd(occ[ext[s]], alpha(t, s) + beta(t, s) - lp(t, s));
    }
    for (Eigen::Index k = 0; k < V; ++k)
      if (occ[k] != kNegInf) r.grad(t, k) = -std::exp(occ[k] - log_p);
  }
  return r;
}

template <typename S>
std::vector<int> CtcGreedyDecode(const Mat<S> &log_probs, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (Eigen::Index t = 0; t < log_probs.rows(); ++t) {
    Eigen::Index best;
    log_probs.row(t).maxCoeff(&best);
    const int k = static_cast<int>(best);
    if (k != prev && k != blank) out.push_back(k);
    prev = k;
  }
  return out;
}

template CtcResult CtcLoss<float>(const Mat<float> &, std::span<const int>, int, bool);
template CtcResult CtcLoss<double>(const Mat<double> &, std::span<const int>, int, bool);
template std::vector<int> CtcGreedyDecode<float>(const Mat<float> &, int);
template std::vector<int> CtcGreedyDecode<double>(const Mat<double> &, int);

}  // namespace minibench
