// minibench/fbank.h

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

#ifndef MINIBENCH_FBANK_H_
#define MINIBENCH_FBANK_H_

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "minibench/feature_cache.h"

namespace minibench {

struct FbankOptions {
  int sample_rate = 16000;
  int n_mels = 80;
  double win_ms = 25.0;
  double hop_ms = 10.0;
  double low_freq = 20.0;
  double high_freq = 0.0;  // <= 0 means Nyquist + high_freq
  double preemph = 0.97;
  bool cmvn = true;

  int WindowSamples() const;
  int HopSamples() const;
  FrameRule Frames() const { return {WindowSamples(), HopSamples()}; }
};

inline constexpr float kLogFloor = 1e-10f;

/// Triangular filters on the mel scale over a one-sided power spectrum.
class MelBanks {
 public:
  MelBanks(const FbankOptions &opts, int fft_size);
  int num_bins() const { return static_cast<int>(bins_.size()); }
  // power.size() == fft_size / 2 + 1
  void Compute(std::span<const double> power, std::span<float> out) const;

  static double MelScale(double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); }

 private:
  struct Bin {
    int first;
    std::vector<double> weights;
  };
  std::vector<Bin> bins_;
};

// Log-mel energies of a mono waveform in [-1, 1]: per frame DC removal,
// pre-emphasis, Hamming window, |FFT|^2, mel filtering, log(max(e, 1e-10)).
// With opts.cmvn each dimension is standardized over the utterance.
// Throws InvalidArgument if the waveform is shorter than one window.
FeatureRecord ExtractFbank(std::span<const float> wave, const FbankOptions &opts,
                           std::string utt_id = "");

// Per-dimension zero mean / unit variance over frames of every layer.
void ApplyCmvn(FeatureRecord *record);

}  // namespace minibench

#endif  // MINIBENCH_FBANK_H_
