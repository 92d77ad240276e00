// wav.cc

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

#include "minibench/wav.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "minibench/common.h"

namespace minibench {

namespace {

void PutU32(std::string *out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutU16(std::string *out, std::uint16_t v) {
  out->push_back(static_cast<char>(v & 0xff));
  out->push_back(static_cast<char>((v >> 8) & 0xff));
}

std::uint32_t GetU32(const std::string &b, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i)
    v = (v << 8) | static_cast<unsigned char>(b[pos + i]);
  return v;
}

std::uint16_t GetU16(const std::string &b, std::size_t pos) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[pos]) |
                                    (static_cast<unsigned char>(b[pos + 1]) << 8));
}

template <typename T>
std::vector<std::int16_t> Quantize(std::span<const T> samples) {
  std::vector<std::int16_t> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double v = std::round(static_cast<double>(samples[i]) * 32768.0);
    out[i] = static_cast<std::int16_t>(std::clamp(v, -32768.0, 32767.0));
  }
  return out;
}

}  // namespace

std::vector<float> WaveData::Normalized() const {
  std::vector<float> out(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    out[i] = static_cast<float>(samples[i]) / 32768.0f;
  return out;
}

std::vector<std::int16_t> QuantizePcm16(std::span<const float> samples) {
  return Quantize(samples);
}

std::vector<std::int16_t> QuantizePcm16(std::span<const double> samples) {
  return Quantize(samples);
}

std::string EncodeWav(const WaveData &wave) {
  const std::uint32_t data_bytes =
      static_cast<std::uint32_t>(wave.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(&out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  PutU32(&out, 16);
  PutU16(&out, 1);  // PCM
  PutU16(&out, 1);  // mono
  PutU32(&out, static_cast<std::uint32_t>(wave.sample_rate));
  PutU32(&out, static_cast<std::uint32_t>(wave.sample_rate * 2));
  PutU16(&out, 2);
  PutU16(&out, 16);
  out += "data";
  PutU32(&out, data_bytes);
  for (std::int16_t s : wave.samples) PutU16(&out, static_cast<std::uint16_t>(s));
  return out;
}

WaveData DecodeWav(const std::string &b) {
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0)
    throw FormatError("not a RIFF/WAVE file");
  WaveData wave;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    std::string id = b.substr(pos, 4);
    std::uint32_t size = GetU32(b, pos + 4);
    std::size_t body = pos + 8;
    if (body + size > b.size()) throw FormatError("truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (size < 16) throw FormatError("short fmt chunk");
      if (GetU16(b, body) != 1) throw FormatError("only PCM wav is supported");
      if (GetU16(b, body + 2) != 1) throw FormatError("only mono wav is supported");
      wave.sample_rate = static_cast<int>(GetU32(b, body + 4));
      if (GetU16(b, body + 14) != 16) throw FormatError("only 16-bit wav is supported");
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk");
      wave.samples.resize(size / 2);
      for (std::size_t i = 0; i < wave.samples.size(); ++i)
        wave.samples[i] = static_cast<std::int16_t>(GetU16(b, body + 2 * i));
      return wave;
    }
    pos = body + size + (size & 1);
  }
  throw FormatError("wav has no data chunk");
}

void WriteWav(const std::filesystem::path &path, const WaveData &wave) {
  WriteFileAtomic(path, EncodeWav(wave));
}

WaveData ReadWav(const std::filesystem::path &path) {
  try {
    return DecodeWav(ReadFileBytes(path));
  } catch (const FormatError &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace minibench
