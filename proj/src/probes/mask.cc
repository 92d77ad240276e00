// probes/mask.cc

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

#include "minibench/probes/mask.h"

#include <algorithm>
#include <cmath>

#include "minibench/common.h"

namespace minibench {

void Inpsm(std::span<const Complex> mixture, std::span<const Complex> source,
           std::span<double> mask, double cap, double eps) {
  if (mixture.size() != source.size() || mask.size() != mixture.size())
    throw InvalidArgument("inpsm: bin count mismatch");
  for (std::size_t f = 0; f < mixture.size(); ++f) {
    const double ratio = std::abs(source[f]) / std::max(std::abs(mixture[f]), eps);
    // cos(a - b) = Re(s conj(y)) / (|s||y|), well defined for zero bins.
    const double denom = std::abs(source[f]) * std::abs(mixture[f]);
    const double cosine = denom > 0.0 ? (source[f] * std::conj(mixture[f])).real() / denom : 1.0;
    mask[f] = std::clamp(ratio * cosine, 0.0, cap);
  }
}

Mat<float> InpsmMask(const Spectrogram &mixture, const Spectrogram &source, double cap) {
  if (mixture.num_frames != source.num_frames || mixture.num_bins() != source.num_bins())
    throw InvalidArgument("inpsm: spectrogram shape mismatch");
  Mat<float> out(mixture.num_frames, mixture.num_bins());
  std::vector<double> row(mixture.num_bins());
  for (int t = 0; t < mixture.num_frames; ++t) {
    Inpsm(mixture.Frame(t), source.Frame(t), row, cap);
    for (int f = 0; f < mixture.num_bins(); ++f) out(t, f) = static_cast<float>(row[f]);
  }
  return out;
}

template <typename S>
MaskLoss MaskObjective(const std::vector<Mat<S>> &predicted, const std::vector<Mat<S>> &targets,
                       bool pit, std::vector<Mat<S>> *grads) {
  const std::size_t n = predicted.size();
  if (n == 0 || targets.size() != n) throw InvalidArgument("mask objective: mask count mismatch");
  for (std::size_t i = 0; i < n; ++i)
    if (predicted[i].rows() != targets[i].rows() || predicted[i].cols() != targets[i].cols())
      throw InvalidArgument("mask objective: shape mismatch");
  if (pit && n != 2) throw InvalidArgument("mask objective: permutation invariance needs 2 masks");

  const double count = static_cast<double>(n) * static_cast<double>(predicted[0].size());
  auto score = [&](const std::vector<int> &assign) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      sum += (predicted[i] - targets[assign[i]]).template cast<double>().squaredNorm();
    return sum / count;
  };

  MaskLoss r;
  r.assignment.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.assignment[i] = static_cast<int>(i);
  r.loss = score(r.assignment);
  if (pit) {
    const std::vector<int> swapped = {1, 0};
    const double alt = score(swapped);
    if (alt < r.loss) {
      r.loss = alt;
      r.assignment = swapped;
    }
  }
  if (grads) {
    grads->resize(n);
    for (std::size_t i = 0; i < n; ++i)
      (*grads)[i] = (predicted[i] - targets[r.assignment[i]]) * static_cast<S>(2.0 / count);
  }
  return r;
}

Spectrogram ApplyMask(const Spectrogram &mixture, const Mat<float> &mask) {
  if (mask.rows() != mixture.num_frames || mask.cols() != mixture.num_bins())
    throw InvalidArgument("apply mask: shape mismatch");
  Spectrogram out = mixture;
  for (int t = 0; t < out.num_frames; ++t)
    for (int f = 0; f < out.num_bins(); ++f) out.at(t, f) *= static_cast<double>(mask(t, f));
  return out;
}

template MaskLoss MaskObjective<float>(const std::vector<Mat<float>> &,
                                       const std::vector<Mat<float>> &, bool,
                                       std::vector<Mat<float>> *);
template MaskLoss MaskObjective<double>(const std::vector<Mat<double>> &,
                                        const std::vector<Mat<double>> &, bool,
                                        std::vector<Mat<double>> *);

}  // namespace minibench
