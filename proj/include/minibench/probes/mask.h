// minibench/probes/mask.h

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

#ifndef MINIBENCH_PROBES_MASK_H_
#define MINIBENCH_PROBES_MASK_H_

#include <span>
#include <vector>

#include "minibench/probes/stft.h"
#include "minibench/probes/tensor.h"

namespace minibench {

inline constexpr double kMaskEpsilon = 1e-8;

// Non-negative phase-sensitive mask of one frame:
// clamp(|S| / max(|Y|, eps) * cos(angle(S) - angle(Y)), 0, cap).
void Inpsm(std::span<const Complex> mixture, std::span<const Complex> source,
           std::span<double> mask, double cap = 1.0, double eps = kMaskEpsilon);

// Frames x bins target mask for a whole utterance.
Mat<float> InpsmMask(const Spectrogram &mixture, const Spectrogram &source, double cap = 1.0);

struct MaskLoss {
  double loss = 0.0;
  std::vector<int> assignment;  // prediction i is scored against target assignment[i]
};

// Mean squared error over every mask, frame and bin.  With `pit`, the
// minimum over the two prediction-to-target assignments (2 masks only).
// Gradients w.r.t. the predictions are written to `grads` when non-null.
template <typename S>
MaskLoss MaskObjective(const std::vector<Mat<S>> &predicted, const std::vector<Mat<S>> &targets,
                       bool pit, std::vector<Mat<S>> *grads = nullptr);

// Multiplies each bin of `mixture` by the mask, keeping the mixture phase.
Spectrogram ApplyMask(const Spectrogram &mixture, const Mat<float> &mask);

}  // namespace minibench

#endif  // MINIBENCH_PROBES_MASK_H_
