// extractors.cc

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

#include "minibench/extractors.h"

#include <algorithm>

#include "minibench/common.h"
#include "minibench/rng.h"

namespace minibench {

using nlohmann::json;

namespace {

FbankOptions FbankFromJson(const json &spec) {
  FbankOptions o;
  o.n_mels = spec.value("n_mels", o.n_mels);
  o.win_ms = spec.value("win_ms", o.win_ms);
  o.hop_ms = spec.value("hop_ms", o.hop_ms);
  o.sample_rate = spec.value("sample_rate", o.sample_rate);
  o.cmvn = spec.value("cmvn", o.cmvn);
  return o;
}

class FbankExtractor : public FeatureExtractor {
 public:
  explicit FbankExtractor(FbankOptions opts) : opts_(opts) {}
  FeatureRecord Extract(std::string id, std::span<const float> wave) const override {
    return ExtractFbank(wave, opts_, std::move(id));
  }
  int num_layers() const override { return 1; }
  int dim() const override { return opts_.n_mels; }
  FrameRule frames() const override { return opts_.Frames(); }
  json Describe() const override {
    return {{"type", "fbank"}, {"n_mels", opts_.n_mels}, {"win_ms", opts_.win_ms},
            {"hop_ms", opts_.hop_ms}, {"cmvn", opts_.cmvn}};
  }

 private:
  FbankOptions opts_;
};

class ContextStackExtractor : public FeatureExtractor {
 public:
  ContextStackExtractor(FbankOptions opts, int layers, int context)
      : opts_(opts), layers_(layers), context_(context) {
    if (layers_ < 1 || context_ < 1)
      throw InvalidArgument("context_stack needs layers >= 1 and context >= 1");
  }
  FeatureRecord Extract(std::string id, std::span<const float> wave) const override {
    FeatureRecord base = ExtractFbank(wave, opts_, id);
    const int frames = base.num_frames, dim = base.dim;
    FeatureRecord out(std::move(id), layers_, frames, dim);
    // Prefix sums over time give each moving average in O(T * D).
    std::vector<double> prefix(static_cast<std::size_t>(frames + 1) * dim, 0.0);
    for (int t = 0; t < frames; ++t)
      for (int d = 0; d < dim; ++d)
        prefix[static_cast<std::size_t>(t + 1) * dim + d] =
            prefix[static_cast<std::size_t>(t) * dim + d] + base.at(0, t, d);
    for (int l = 0; l < layers_; ++l) {
      const int half = l * context_;
      for (int t = 0; t < frames; ++t) {
        const int lo = std::max(0, t - half);
        const int hi = std::min(frames - 1, t + half);
        for (int d = 0; d < dim; ++d) {
          const double sum = prefix[static_cast<std::size_t>(hi + 1) * dim + d] -
                             prefix[static_cast<std::size_t>(lo) * dim + d];
          out.at(l, t, d) = static_cast<float>(sum / (hi - lo + 1));
        }
      }
    }
    return out;
  }
  int num_layers() const override { return layers_; }
  int dim() const override { return opts_.n_mels; }
  FrameRule frames() const override { return opts_.Frames(); }
  json Describe() const override {
    return {{"type", "context_stack"}, {"n_mels", opts_.n_mels}, {"win_ms", opts_.win_ms},
            {"hop_ms", opts_.hop_ms}, {"cmvn", opts_.cmvn}, {"layers", layers_},
            {"context", context_}};
  }

 private:
  FbankOptions opts_;
  int layers_;
  int context_;
};

class NoiseExtractor : public FeatureExtractor {
 public:
  NoiseExtractor(FbankOptions framing, int layers, int dim, std::uint64_t seed)
      : framing_(framing), layers_(layers), dim_(dim), seed_(seed) {
    if (layers_ < 1 || dim_ < 1) throw InvalidArgument("noise needs layers >= 1 and dim >= 1");
  }
  FeatureRecord Extract(std::string id, std::span<const float> wave) const override {
    const std::int64_t frames = frames_rule().NumFrames(static_cast<std::int64_t>(wave.size()));
    if (frames < 1) throw InvalidArgument("waveform shorter than one window");
    Rng rng(Rng::Derive(seed_, id));
    FeatureRecord out(std::move(id), layers_, static_cast<int>(frames), dim_);
    for (float &v : out.data) v = static_cast<float>(rng.Normal());
    return out;
  }
  int num_layers() const override { return layers_; }
  int dim() const override { return dim_; }
  FrameRule frames() const override { return frames_rule(); }
  json Describe() const override {
    return {{"type", "noise"}, {"layers", layers_}, {"dim", dim_}, {"seed", seed_},
            {"win_ms", framing_.win_ms}, {"hop_ms", framing_.hop_ms}};
  }

 private:
  FrameRule frames_rule() const { return framing_.Frames(); }
  FbankOptions framing_;
  int layers_;
  int dim_;
  std::uint64_t seed_;
};

}  // namespace

std::unique_ptr<FeatureExtractor> MakeExtractor(const json &spec, TaskKind task) {
  const std::string type = spec.value("type", std::string());
  FbankOptions o = FbankFromJson(spec);
  if (task == TaskKind::kSid) o.cmvn = spec.value("sid_cmvn", false);
  if (type == "fbank") return std::make_unique<FbankExtractor>(o);
  if (type == "context_stack")
    return std::make_unique<ContextStackExtractor>(o, spec.value("layers", 4),
                                                   spec.value("context", 2));
  if (type == "noise")
    return std::make_unique<NoiseExtractor>(o, spec.value("layers", 3),
                                            spec.value("dim", 40),
                                            spec.value("seed", std::uint64_t{7}));
  throw InvalidArgument("unknown extractor type '" + type + "'");
}

}  // namespace minibench
