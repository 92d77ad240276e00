// fbank.cc

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

#include "minibench/fbank.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "minibench/common.h"

namespace minibench {

int FbankOptions::WindowSamples() const {
  return static_cast<int>(std::lround(sample_rate * win_ms / 1000.0));
}

int FbankOptions::HopSamples() const {
  return static_cast<int>(std::lround(sample_rate * hop_ms / 1000.0));
}

MelBanks::MelBanks(const FbankOptions &opts, int fft_size) {
  const double nyquist = 0.5 * opts.sample_rate;
  const double high = opts.high_freq > 0.0 ? opts.high_freq : nyquist + opts.high_freq;
  if (opts.n_mels < 1) throw InvalidArgument("n_mels must be positive");
  if (!(opts.low_freq >= 0.0 && high > opts.low_freq && high <= nyquist))
    throw InvalidArgument("invalid mel frequency range");
  const int num_fft_bins = fft_size / 2;
  const double fft_bin_width = static_cast<double>(opts.sample_rate) / fft_size;
  const double mel_low = MelScale(opts.low_freq);
  const double mel_high = MelScale(high);
  const double delta = (mel_high - mel_low) / (opts.n_mels + 1);

  for (int b = 0; b < opts.n_mels; ++b) {
    const double left = mel_low + b * delta;
    const double center = left + delta;
    const double right = center + delta;
    Bin bin{-1, {}};
    for (int i = 0; i < num_fft_bins; ++i) {
      const double mel = MelScale(fft_bin_width * i);
      if (mel > left && mel < right) {
        const double w = mel <= center ? (mel - left) / (center - left)
                                       : (right - mel) / (right - center);
        if (bin.first < 0) bin.first = i;
        bin.weights.resize(static_cast<std::size_t>(i - bin.first + 1), 0.0);
        bin.weights.back() = w;
      }
    }
    if (bin.first < 0) bin.first = 0;  // empty filter, always outputs the floor
    bins_.push_back(std::move(bin));
  }
}

void MelBanks::Compute(std::span<const double> power, std::span<float> out) const {
  for (std::size_t b = 0; b < bins_.size(); ++b) {
    double e = 0.0;
    const Bin &bin = bins_[b];
    for (std::size_t k = 0; k < bin.weights.size(); ++k)
      e += bin.weights[k] * power[static_cast<std::size_t>(bin.first) + k];
    out[b] = std::log(std::max(static_cast<float>(e), kLogFloor));
  }
}

FeatureRecord ExtractFbank(std::span<const float> wave, const FbankOptions &opts,
                           std::string utt_id) {
  const int window = opts.WindowSamples();
  const int hop = opts.HopSamples();
  if (window < 2 || hop < 1) throw InvalidArgument("invalid fbank framing");
  const FrameRule rule = opts.Frames();
  const std::int64_t frames = rule.NumFrames(static_cast<std::int64_t>(wave.size()));
  if (frames < 1)
    throw InvalidArgument("waveform of " + std::to_string(wave.size()) +
                          " samples is shorter than one " + std::to_string(window) +
                          "-sample window");
  int fft_size = 1;
  while (fft_size < window) fft_size <<= 1;

  MelBanks banks(opts, fft_size);
  std::vector<double> hamming(static_cast<std::size_t>(window));
  for (int i = 0; i < window; ++i)
    hamming[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (window - 1));

  FeatureRecord rec(std::move(utt_id), 1, static_cast<int>(frames), opts.n_mels);
  Eigen::FFT<double> fft;
  std::vector<double> buf(static_cast<std::size_t>(fft_size));
  std::vector<std::complex<double>> spec;
  std::vector<double> power(static_cast<std::size_t>(fft_size / 2 + 1));

  for (int t = 0; t < frames; ++t) {
    const float *x = wave.data() + static_cast<std::ptrdiff_t>(t) * hop;
    std::fill(buf.begin(), buf.end(), 0.0);
    double mean = 0.0;
    for (int i = 0; i < window; ++i) mean += x[i];
    mean /= window;
    for (int i = 0; i < window; ++i) buf[i] = x[i] - mean;
    for (int i = window - 1; i > 0; --i) buf[i] -= opts.preemph * buf[i - 1];
    buf[0] -= opts.preemph * buf[0];
    for (int i = 0; i < window; ++i) buf[i] *= hamming[i];
    fft.fwd(spec, buf);
    for (int k = 0; k <= fft_size / 2; ++k) power[k] = std::norm(spec[k]);
    banks.Compute(power, rec.Frame(0, t));
  }
  if (opts.cmvn) ApplyCmvn(&rec);
  return rec;
}

void ApplyCmvn(FeatureRecord *r) {
  const int frames = r->num_frames;
  for (int l = 0; l < r->num_layers; ++l) {
    for (int d = 0; d < r->dim; ++d) {
      double mean = 0.0;
      for (int t = 0; t < frames; ++t) mean += r->at(l, t, d);
      mean /= frames;
      double var = 0.0;
      for (int t = 0; t < frames; ++t) {
        const double c = r->at(l, t, d) - mean;
        var += c * c;
      }
      var /= frames;
      const double scale = var > 1e-20 ? 1.0 / std::sqrt(var) : 1.0;
      for (int t = 0; t < frames; ++t)
        r->at(l, t, d) = static_cast<float>((r->at(l, t, d) - mean) * scale);
    }
  }
}

}  // namespace minibench
