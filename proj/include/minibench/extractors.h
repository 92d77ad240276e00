// minibench/extractors.h

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

#ifndef MINIBENCH_EXTRACTORS_H_
#define MINIBENCH_EXTRACTORS_H_

#include <memory>
#include <span>
#include <string>

#include "json.hpp"
#include "minibench/corpus.h"
#include "minibench/fbank.h"
#include "minibench/feature_cache.h"

namespace minibench {

/// Native feature sources that stand in for frozen upstream models.
///
///   {"type": "fbank", "n_mels": 80, "cmvn": true, "sid_cmvn": false}
///       Log-mel filterbank, L = 1.
///   {"type": "context_stack", "n_mels": 80, "layers": 4, "context": 2}
///       Layer l is the log-mel smoothed by a centered moving average of
///       half-width l * context frames (layer 0 is unsmoothed).
///
/// Both use `cmvn` for every task except SID, which uses `sid_cmvn`.
///   {"type": "noise", "layers": 3, "dim": 40, "seed": 7}
///       Standard normal values seeded by utterance id; carries no
///       information about the audio.
///
/// Real pretrained models are exported into the cache format by a separate
/// tool; the harness reads those caches unchanged.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual FeatureRecord Extract(std::string utt_id, std::span<const float> wave) const = 0;
  virtual int num_layers() const = 0;
  virtual int dim() const = 0;
  virtual FrameRule frames() const = 0;
  // Canonical description, used in cache stamps.
  virtual nlohmann::json Describe() const = 0;
};

std::unique_ptr<FeatureExtractor> MakeExtractor(const nlohmann::json &spec, TaskKind task);

}  // namespace minibench

#endif  // MINIBENCH_EXTRACTORS_H_
