// synth.cc

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

// Synthetic corpora.  Tokens are short two-partial tones; a "speaker" is a
// harmonic source with its own pitch and spectral envelope.  The signals are
// crude but give every task a learnable structure at desk scale.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "minibench/common.h"
#include "minibench/corpus.h"
#include "minibench/rng.h"
#include "minibench/wav.h"

namespace minibench {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Voice {
  double f0;
  double formant;
  double bandwidth;
};

Voice MakeVoice(const SynthSpec &spec, int speaker) {
  Rng rng(Rng::Derive(spec.seed, "speaker", static_cast<std::uint64_t>(speaker)));
  Voice v;
  v.f0 = 90.0 + 170.0 * (speaker + rng.Uniform(0.2, 0.8)) / spec.num_speakers;
  v.formant = rng.Uniform(500.0, 2500.0);
  v.bandwidth = rng.Uniform(300.0, 900.0);
  return v;
}

double Peak(const std::vector<double> &x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

void ScaleToPeak(std::vector<double> *x, double peak) {
  const double p = Peak(*x);
  if (p > 0.0)
    for (double &v : *x) v *= peak / p;
}

void AddNoiseFloor(std::vector<double> *x, Rng *rng, double level) {
  for (double &v : *x) v += level * rng->Normal();
}

// Voiced syllables separated by short pauses.
std::vector<double> SpeakerSignal(const SynthSpec &spec, const Voice &voice,
                                  std::int64_t n, Rng *rng) {
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  const double sr = spec.sample_rate;
  const double f0 = voice.f0 * rng->Uniform(0.94, 1.06);
  const double formant = voice.formant * rng->Uniform(0.92, 1.08);
  std::int64_t pos = static_cast<std::int64_t>(rng->Uniform(0.01, 0.05) * sr);
  while (pos < n) {
    const std::int64_t len = static_cast<std::int64_t>(rng->Uniform(0.10, 0.25) * sr);
    const double rate = rng->Uniform(2.0, 6.0);
    const double phase0 = rng->Uniform(0.0, kTwoPi);
    const double level = rng->Uniform(0.6, 1.0);
    double phase = 0.0;
    for (std::int64_t t = 0; t < len && pos + t < n; ++t) {
      const double time = t / sr;
      const double f = f0 * (1.0 + 0.04 * std::sin(kTwoPi * rate * time + phase0));
      phase += kTwoPi * f / sr;
      const double env = 0.5 - 0.5 * std::cos(kTwoPi * (t + 0.5) / len);
      double s = 0.0;
      for (int h = 1; h * f < 0.45 * sr && h * f < 4000.0; ++h) {
        const double d = (h * f - formant) / voice.bandwidth;
        s += (std::exp(-d * d) + 0.15 / h) * std::sin(h * phase);
      }
      x[static_cast<std::size_t>(pos + t)] += level * env * s;
    }
    pos += len + static_cast<std::int64_t>(rng->Uniform(0.02, 0.08) * sr);
  }
  ScaleToPeak(&x, spec.amplitude);
  AddNoiseFloor(&x, rng, spec.amplitude * 1e-3);
  return x;
}

std::vector<double> TokenSignal(const SynthSpec &spec,
                                const std::vector<int> &tokens, Rng *rng) {
  const double sr = spec.sample_rate;
  std::vector<double> x;
  auto silence = [&](double seconds) {
    x.insert(x.end(), static_cast<std::size_t>(seconds * sr), 0.0);
  };
  silence(rng->Uniform(0.04, 0.08));
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const double f = (300.0 + 140.0 * tokens[i]) * rng->Uniform(0.98, 1.02);
    const double level = rng->Uniform(0.5, 1.0);
    const std::size_t len = static_cast<std::size_t>(rng->Uniform(0.09, 0.15) * sr);
    for (std::size_t t = 0; t < len; ++t) {
      const double env = 0.5 - 0.5 * std::cos(kTwoPi * (t + 0.5) / len);
      const double ph = kTwoPi * f * t / sr;
      x.push_back(level * env * (std::sin(ph) + 0.5 * std::sin(2.0 * ph)));
    }
    silence(rng->Uniform(0.04, 0.08));
  }
  ScaleToPeak(&x, spec.amplitude);
  AddNoiseFloor(&x, rng, spec.amplitude * 1e-3);
  return x;
}

// One-pole low-pass filtered Gaussian noise.
std::vector<double> ColoredNoise(std::int64_t n, Rng *rng) {
  const double a = rng->Uniform(0.0, 0.9);
  std::vector<double> x(static_cast<std::size_t>(n));
  double y = 0.0;
  for (auto &v : x) {
    y = a * y + (1.0 - a) * rng->Normal();
    v = y;
  }
  return x;
}

double Power(const std::vector<double> &x) {
  double p = 0.0;
  for (double v : x) p += v * v;
  return x.empty() ? 0.0 : p / x.size();
}

std::vector<float> ToFloat(const std::vector<std::int16_t> &x) {
  std::vector<float> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / 32768.0f;
  return out;
}

std::string UttId(TaskKind kind, Split split, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%s_%05d", ToLower(TaskKindName(kind)).c_str(),
                std::string(SplitName(split)).c_str(), index);
  return buf;
}

std::string SpeakerId(int s) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "spk%03d", s);
  return buf;
}

}  // namespace

double SegmentalSnr(const std::vector<float> &clean, const std::vector<float> &noisy) {
  if (clean.size() != noisy.size())
    throw InvalidArgument("segmental SNR needs equal lengths");
  constexpr std::size_t kSeg = 256;
  double total = 0.0;
  int count = 0;
  for (std::size_t start = 0; start < clean.size(); start += kSeg) {
    const std::size_t end = std::min(clean.size(), start + kSeg);
    double s = 0.0, e = 0.0;
    for (std::size_t i = start; i < end; ++i) {
      const double d = static_cast<double>(noisy[i]) - clean[i];
      s += static_cast<double>(clean[i]) * clean[i];
      e += d * d;
    }
    double snr = 10.0 * std::log10((s + 1e-10) / (e + 1e-10));
    total += std::clamp(snr, -10.0, 35.0);
    ++count;
  }
  return count ? total / count : 0.0;
}

double PowerRatioDb(const std::vector<float> &a, const std::vector<float> &b) {
  double pa = 0.0, pb = 0.0;
  for (float v : a) pa += static_cast<double>(v) * v;
  for (float v : b) pb += static_cast<double>(v) * v;
  if (pb <= 0.0) return kSnrCapDb;
  if (pa <= 0.0) return -kSnrCapDb;
  return std::clamp(10.0 * std::log10(pa / pb), -kSnrCapDb, kSnrCapDb);
}

void ValidateSynthSpec(const SynthSpec &spec) {
  auto fail = [](const std::string &msg) { throw InvalidArgument("synth spec: " + msg); };
  if (spec.sample_rate <= 0) fail("sample_rate must be positive");
  if (spec.num_train < 0 || spec.num_dev < 0 || spec.num_test < 0)
    fail("split sizes must be non-negative");
  if (spec.min_samples <= 0 || spec.max_samples < spec.min_samples)
    fail("need 0 < min_samples <= max_samples");
  if (spec.amplitude <= 0.0 || spec.amplitude > 0.45) fail("amplitude must be in (0, 0.45]");
  switch (spec.kind) {
    case TaskKind::kAsr:
      if (spec.vocab_size < 1) fail("ASR needs vocab_size >= 1");
      if (spec.min_tokens < 1 || spec.max_tokens < spec.min_tokens)
        fail("ASR needs 1 <= min_tokens <= max_tokens");
      break;
    case TaskKind::kSid:
    case TaskKind::kSe:
    case TaskKind::kSs:
      if (spec.num_speakers < 1)
        fail(std::string(TaskKindName(spec.kind)) + " needs at least one speaker");
      break;
  }
  if (spec.kind == TaskKind::kSe || spec.kind == TaskKind::kSs) {
    if (spec.strata_edges.size() < 2) fail("need at least two strata edges");
    for (std::size_t i = 1; i < spec.strata_edges.size(); ++i)
      if (!(spec.strata_edges[i] > spec.strata_edges[i - 1]))
        fail("strata edges must be strictly increasing");
  }
  if (spec.second_source_gain && *spec.second_source_gain < 0.0)
    fail("second_source_gain must be non-negative");
}

json SynthSpecToJson(const SynthSpec &s) {
  json j;
  j["kind"] = std::string(TaskKindName(s.kind));
  j["seed"] = s.seed;
  j["sample_rate"] = s.sample_rate;
  j["num_train"] = s.num_train;
  j["num_dev"] = s.num_dev;
  j["num_test"] = s.num_test;
  j["vocab_size"] = s.vocab_size;
  j["min_tokens"] = s.min_tokens;
  j["max_tokens"] = s.max_tokens;
  j["num_speakers"] = s.num_speakers;
  j["min_samples"] = s.min_samples;
  j["max_samples"] = s.max_samples;
  j["strata_edges"] = s.strata_edges;
  if (s.second_source_gain) j["second_source_gain"] = *s.second_source_gain;
  if (s.relative_gain_db) j["relative_gain_db"] = *s.relative_gain_db;
  j["amplitude"] = s.amplitude;
  return j;
}

SynthSpec SynthSpecFromJson(const json &j) {
  SynthSpec s;
  s.kind = ParseTaskKind(j.at("kind").get<std::string>());
  s.seed = j.value("seed", s.seed);
  s.sample_rate = j.value("sample_rate", s.sample_rate);
  s.num_train = j.value("num_train", s.num_train);
  s.num_dev = j.value("num_dev", s.num_dev);
  s.num_test = j.value("num_test", s.num_test);
  s.vocab_size = j.value("vocab_size", s.vocab_size);
  s.min_tokens = j.value("min_tokens", s.min_tokens);
  s.max_tokens = j.value("max_tokens", s.max_tokens);
  s.num_speakers = j.value("num_speakers", s.num_speakers);
  s.min_samples = j.value("min_samples", s.min_samples);
  s.max_samples = j.value("max_samples", s.max_samples);
  s.strata_edges = j.value("strata_edges", s.strata_edges);
  if (j.contains("second_source_gain")) s.second_source_gain = j["second_source_gain"].get<double>();
  if (j.contains("relative_gain_db")) s.relative_gain_db = j["relative_gain_db"].get<double>();
  s.amplitude = j.value("amplitude", s.amplitude);
  return s;
}

SynthCorpus SynthesizeCorpus(const SynthSpec &spec, const std::filesystem::path &out_dir) {
  ValidateSynthSpec(spec);
  const std::filesystem::path audio_dir = out_dir / "audio";
  std::filesystem::create_directories(audio_dir);
  const double lo = spec.strata_edges.front();
  const double hi = spec.strata_edges.back();

  std::vector<Voice> voices;
  for (int s = 0; s < spec.num_speakers; ++s) voices.push_back(MakeVoice(spec, s));

  auto write = [&](const std::string &name, const std::vector<std::int16_t> &pcm) {
    WaveData w;
    w.sample_rate = spec.sample_rate;
    w.samples = pcm;
    WriteWav(audio_dir / name, w);
    return "audio/" + name;
  };

  auto make_split = [&](Split split, int count, std::uint64_t stream) {
    Manifest m;
    m.base_dir = out_dir;
    for (int i = 0; i < count; ++i) {
      Rng rng(Rng::Derive(spec.seed, std::string(SplitName(split)) + "/utt",
                          stream + static_cast<std::uint64_t>(i)));
      Utterance u;
      u.id = UttId(spec.kind, split, i);
      u.split = split;
      u.sample_rate = spec.sample_rate;
      const std::int64_t n = rng.UniformInt(spec.min_samples, spec.max_samples);
      switch (spec.kind) {
        case TaskKind::kAsr: {
          const int count_tokens =
              static_cast<int>(rng.UniformInt(spec.min_tokens, spec.max_tokens));
          std::vector<int> tokens;
          std::vector<std::string> words;
          for (int k = 0; k < count_tokens; ++k) {
            tokens.push_back(static_cast<int>(rng.UniformInt(
                static_cast<std::uint64_t>(spec.vocab_size))));
            words.push_back("t" + std::to_string(tokens.back()));
          }
          auto pcm = QuantizePcm16(std::span<const double>(TokenSignal(spec, tokens, &rng)));
          u.audio = write(u.id + ".wav", pcm);
          u.num_samples = static_cast<std::int64_t>(pcm.size());
          u.transcript = words;
          break;
        }
        case TaskKind::kSid: {
          const int s = i % spec.num_speakers;
          auto pcm = QuantizePcm16(std::span<const double>(SpeakerSignal(spec, voices[s], n, &rng)));
          u.audio = write(u.id + ".wav", pcm);
          u.num_samples = n;
          u.speaker = SpeakerId(s);
          break;
        }
        case TaskKind::kSe: {
          const int s = static_cast<int>(rng.UniformInt(static_cast<std::uint64_t>(spec.num_speakers)));
          std::vector<double> clean = SpeakerSignal(spec, voices[s], n, &rng);
          std::vector<double> noise = ColoredNoise(n, &rng);
          const double target = rng.Uniform(lo, hi);
          const double g = std::sqrt(Power(clean) / (Power(noise) * std::pow(10.0, target / 10.0)));
          for (double &v : noise) v *= g;
          // Keep clean + noise inside the PCM16 range.
          const double peak = Peak(clean) + Peak(noise);
          if (peak > 0.9)
            for (std::size_t k = 0; k < clean.size(); ++k) {
              clean[k] *= 0.9 / peak;
              noise[k] *= 0.9 / peak;
            }
          auto clean_q = QuantizePcm16(std::span<const double>(clean));
          auto noise_q = QuantizePcm16(std::span<const double>(noise));
          std::vector<std::int16_t> noisy_q(clean_q.size());
          for (std::size_t k = 0; k < clean_q.size(); ++k)
            noisy_q[k] = static_cast<std::int16_t>(clean_q[k] + noise_q[k]);
          u.refs["clean"] = write(u.id + "_clean.wav", clean_q);
          u.refs["noisy"] = write(u.id + "_noisy.wav", noisy_q);
          u.audio = u.refs["noisy"];
          u.num_samples = n;
          u.speaker = SpeakerId(s);
          u.score = std::clamp(SegmentalSnr(ToFloat(clean_q), ToFloat(noisy_q)), lo, hi);
          break;
        }
        case TaskKind::kSs: {
          const int a = static_cast<int>(rng.UniformInt(static_cast<std::uint64_t>(spec.num_speakers)));
          int b = a;
          if (spec.num_speakers > 1)
            b = (a + 1 + static_cast<int>(rng.UniformInt(
                             static_cast<std::uint64_t>(spec.num_speakers - 1)))) %
                spec.num_speakers;
          std::vector<double> s1 = SpeakerSignal(spec, voices[a], n, &rng);
          std::vector<double> s2 = SpeakerSignal(spec, voices[b], n, &rng);
          const bool targeted = !spec.second_source_gain.has_value();
          double g;
          if (spec.second_source_gain) {
            g = *spec.second_source_gain;
          } else {
            const double target = spec.relative_gain_db ? *spec.relative_gain_db
                                                        : rng.Uniform(lo, hi);
            g = std::sqrt(Power(s1) / (Power(s2) * std::pow(10.0, target / 10.0)));
          }
          for (double &v : s2) v *= g;
          const double peak = Peak(s1) + Peak(s2);
          if (peak > 0.9)
            for (std::size_t k = 0; k < s1.size(); ++k) {
              s1[k] *= 0.9 / peak;
              s2[k] *= 0.9 / peak;
            }
          auto q1 = QuantizePcm16(std::span<const double>(s1));
          auto q2 = QuantizePcm16(std::span<const double>(s2));
          std::vector<std::int16_t> mix(q1.size());
          for (std::size_t k = 0; k < q1.size(); ++k)
            mix[k] = static_cast<std::int16_t>(q1[k] + q2[k]);
          u.refs["src1"] = write(u.id + "_src1.wav", q1);
          u.refs["src2"] = write(u.id + "_src2.wav", q2);
          u.refs["mix"] = write(u.id + "_mix.wav", mix);
          u.audio = u.refs["mix"];
          u.num_samples = n;
          double label = PowerRatioDb(ToFloat(q1), ToFloat(q2));
          if (targeted && !spec.relative_gain_db) label = std::clamp(label, lo, hi);
          u.score = label;
          break;
        }
      }
      m.utterances.push_back(std::move(u));
    }
    SaveManifest(out_dir / (std::string(SplitName(split)) + ".jsonl"), m);
    return m;
  };

  SynthCorpus corpus;
  corpus.train = make_split(Split::kTrain, spec.num_train, 0);
  corpus.dev = make_split(Split::kDev, spec.num_dev, 0);
  corpus.test = make_split(Split::kTest, spec.num_test, 0);
  return corpus;
}

}  // namespace minibench
