// probes/stft.cc

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

#include "minibench/probes/stft.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "minibench/common.h"

namespace minibench {

std::vector<double> HannWindow(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  return w;
}

bool IsCola(const StftOptions &opts) {
  if (opts.n_fft < 2 || opts.hop < 1 || opts.hop > opts.n_fft) return false;
  const auto w = HannWindow(opts.n_fft);
  std::vector<double> sum(opts.hop, 0.0);
  for (int i = 0; i < opts.n_fft; ++i) sum[i % opts.hop] += w[i];
  const auto [lo, hi] = std::minmax_element(sum.begin(), sum.end());
  return *hi - *lo <= 1e-9 * *hi;
}

namespace {

void CheckOptions(const StftOptions &opts) {
  if (opts.n_fft % 2 != 0) throw InvalidArgument("stft: n_fft must be even");
  if (!IsCola(opts))
    throw InvalidArgument("stft: Hann window with n_fft " + std::to_string(opts.n_fft) +
                          " and hop " + std::to_string(opts.hop) + " is not COLA");
}

Spectrogram Analyse(const std::vector<double> &wave, const StftOptions &opts) {
  CheckOptions(opts);
  const int n = opts.n_fft;
  const int pad = opts.center ? n / 2 : 0;
  std::vector<double> padded(wave.size() + 2 * pad, 0.0);
  std::copy(wave.begin(), wave.end(), padded.begin() + pad);

  Spectrogram s;
  s.opts = opts;
  s.length = wave.size();
  s.num_frames = padded.size() < static_cast<std::size_t>(n)
                     ? 0
                     : static_cast<int>((padded.size() - n) / opts.hop) + 1;
  s.bins.resize(static_cast<std::size_t>(s.num_frames) * s.num_bins());
  const auto w = HannWindow(n);
  Eigen::FFT<double> fft;
  std::vector<double> frame(n);
  std::vector<Complex> spec;
  for (int t = 0; t < s.num_frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * opts.hop;
    for (int i = 0; i < n; ++i) frame[i] = padded[start + i] * w[i];
    fft.fwd(spec, frame);
    for (int f = 0; f < s.num_bins(); ++f) s.at(t, f) = spec[f];
  }
  return s;
}

}  // namespace

Spectrogram Stft(std::span<const double> wave, const StftOptions &opts) {
  return Analyse(std::vector<double>(wave.begin(), wave.end()), opts);
}

Spectrogram Stft(std::span<const float> wave, const StftOptions &opts) {
  return Analyse(std::vector<double>(wave.begin(), wave.end()), opts);
}

std::vector<double> Istft(const Spectrogram &spec) {
  CheckOptions(spec.opts);
  const int n = spec.opts.n_fft;
  const int pad = spec.opts.center ? n / 2 : 0;
  const std::size_t total =
      spec.num_frames == 0 ? 0 : static_cast<std::size_t>(spec.num_frames - 1) * spec.opts.hop + n;
  std::vector<double> acc(total, 0.0), env(total, 0.0);
  const auto w = HannWindow(n);
  Eigen::FFT<double> fft;
  std::vector<Complex> full(n);
  std::vector<double> frame;
  for (int t = 0; t < spec.num_frames; ++t) {
    for (int f = 0; f < spec.num_bins(); ++f) full[f] = spec.at(t, f);
    for (int f = spec.num_bins(); f < n; ++f) full[f] = std::conj(full[n - f]);
    fft.inv(frame, full);
    const std::size_t start = static_cast<std::size_t>(t) * spec.opts.hop;
    for (int i = 0; i < n; ++i) {
      acc[start + i] += frame[i] * w[i];
      env[start + i] += w[i] * w[i];
    }
  }
  std::vector<double> out(spec.length, 0.0);
  for (std::size_t i = 0; i < spec.length; ++i) {
    const std::size_t j = i + pad;
    if (j < total && env[j] > 1e-11) out[i] = acc[j] / env[j];
  }
  return out;
}

double SpectralEnergy(const Spectrogram &spec) {
  const int n = spec.opts.n_fft;
  double sum = 0.0;
  for (int t = 0; t < spec.num_frames; ++t) {
    for (int f = 0; f < spec.num_bins(); ++f) {
      const double p = std::norm(spec.at(t, f));
      sum += (f == 0 || f == n / 2) ? p : 2.0 * p;
    }
  }
  return sum / n;
}

std::vector<int> MapFramesToFeatures(int num_stft_frames, const StftOptions &opts,
                                     int feature_window, int feature_hop, int num_feature_frames) {
  if (num_feature_frames < 1) throw InvalidArgument("no feature frames to map onto");
  std::vector<int> map(num_stft_frames);
  const double offset = opts.center ? 0.0 : opts.n_fft / 2.0;
  for (int m = 0; m < num_stft_frames; ++m) {
    const double centre = m * static_cast<double>(opts.hop) + offset;
    const long t = std::lround((centre - feature_window / 2.0) / feature_hop);
    map[m] = static_cast<int>(std::clamp<long>(t, 0, num_feature_frames - 1));
  }
  return map;
}

}  // namespace minibench
