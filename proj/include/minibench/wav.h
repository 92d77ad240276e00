// minibench/wav.h

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

#ifndef MINIBENCH_WAV_H_
#define MINIBENCH_WAV_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace minibench {

/// Mono 16-bit PCM audio.
struct WaveData {
  int sample_rate = 16000;
  std::vector<std::int16_t> samples;

  // Samples scaled to [-1, 1).
  std::vector<float> Normalized() const;
  double Duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Quantizes float samples in [-1, 1] to PCM16 with rounding and saturation.
std::vector<std::int16_t> QuantizePcm16(std::span<const float> samples);
std::vector<std::int16_t> QuantizePcm16(std::span<const double> samples);

// RIFF/WAVE, PCM format tag 1, one channel, 16 bits, little-endian.
std::string EncodeWav(const WaveData &wave);
WaveData DecodeWav(const std::string &bytes);

void WriteWav(const std::filesystem::path &path, const WaveData &wave);
WaveData ReadWav(const std::filesystem::path &path);

}  // namespace minibench

#endif  // MINIBENCH_WAV_H_
