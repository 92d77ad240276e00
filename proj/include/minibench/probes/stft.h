// minibench/probes/stft.h

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

#ifndef MINIBENCH_PROBES_STFT_H_
#define MINIBENCH_PROBES_STFT_H_

#include <complex>
#include <span>
#include <vector>

namespace minibench {

using Complex = std::complex<double>;

struct StftOptions {
  int n_fft = 512;
  int hop = 256;
  bool center = true;  // zero-pad n_fft/2 on both sides
  int num_bins() const { return n_fft / 2 + 1; }
};

// Periodic Hann window.
std::vector<double> HannWindow(int n);

// True if shifted copies of the window at the hop sum to a constant.
bool IsCola(const StftOptions &opts);

/// One-sided short-time spectrum, frames x (n_fft/2 + 1) bins.
struct Spectrogram {
  StftOptions opts;
  int num_frames = 0;
  std::size_t length = 0;  // samples of the analysed signal
  std::vector<Complex> bins;

  int num_bins() const { return opts.num_bins(); }
  Complex &at(int t, int f) { return bins[static_cast<std::size_t>(t) * num_bins() + f]; }
  Complex at(int t, int f) const { return bins[static_cast<std::size_t>(t) * num_bins() + f]; }
  std::span<const Complex> Frame(int t) const {
    return {bins.data() + static_cast<std::size_t>(t) * num_bins(),
            static_cast<std::size_t>(num_bins())};
  }
};

// Throws InvalidArgument for a non-COLA window/hop pair or odd n_fft.
Spectrogram Stft(std::span<const double> wave, const StftOptions &opts = {});
Spectrogram Stft(std::span<const float> wave, const StftOptions &opts = {});

// Weighted overlap-add inverse; returns `length` samples.
std::vector<double> Istft(const Spectrogram &spec);

// sum over frames of sum_n (w[n] x[n + m hop])^2, computed from the bins.
double SpectralEnergy(const Spectrogram &spec);

// Analysis frames whose centre is nearest each STFT frame, for a feature
// framing of `window`/`hop` samples without padding.
std::vector<int> MapFramesToFeatures(int num_stft_frames, const StftOptions &opts,
                                     int feature_window, int feature_hop, int num_feature_frames);

}  // namespace minibench

#endif  // MINIBENCH_PROBES_STFT_H_
