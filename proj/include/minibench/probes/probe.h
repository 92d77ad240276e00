// minibench/probes/probe.h

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

#ifndef MINIBENCH_PROBES_PROBE_H_
#define MINIBENCH_PROBES_PROBE_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "minibench/feature_cache.h"
#include "minibench/probes/layers.h"
#include "minibench/probes/optimizer.h"

namespace minibench {

enum class HeadKind { kLinearSid, kBlstmCtc, kBlstmMask };
const char *HeadKindName(HeadKind kind);

/// Downstream model and its training schedule.
///
///   kLinearSid:  aggregate -> mean over frames -> linear -> class logits
///   kBlstmCtc:   aggregate -> BLSTM stack -> linear -> log-softmax (blank 0)
///   kBlstmMask:  aggregate -> BLSTM stack -> per STFT frame linear ->
///                mask_cap * sigmoid, num_masks x bins
struct ProbeConfig {
  HeadKind head = HeadKind::kLinearSid;
  int num_layers = 1;   // upstream layers
  int input_dim = 0;    // upstream feature dim
  int num_outputs = 0;  // classes, vocabulary incl. blank, or STFT bins
  int hidden = 256;
  int blstm_layers = 3;
  int num_masks = 1;
  double mask_cap = 1.0;
  bool pit = true;
  bool magnitude_loss = false;  // score masks weighted by the mixture magnitude
  bool normalize_layers = true;
  OptimizerOptions optimizer;
  int steps = 100;
  int batch_size = 4;
  int log_every = 10;
  int eval_every = 50;
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static ProbeConfig FromJson(const nlohmann::json &j);
  std::uint64_t Hash() const;
};

/// One training or evaluation item.
struct ProbeExample {
  std::string id;
  std::shared_ptr<const FeatureRecord> features;
  int label = -1;                       // kLinearSid
  std::vector<int> tokens;              // kBlstmCtc, ids in [1, vocab)
  std::vector<Mat<float>> mask_targets; // kBlstmMask, STFT frames x bins each
  Mat<float> mixture_magnitude;         // kBlstmMask with magnitude_loss
  std::vector<int> frame_map;           // STFT frame -> feature frame
};

template <typename S>
class Probe {
 public:
  explicit Probe(const ProbeConfig &config);

  const ProbeConfig &config() const { return config_; }
  // Seeded uniform(-1/sqrt(fan), 1/sqrt(fan)) init; aggregator logits zero.
  void Init(std::uint64_t seed);

  std::vector<Param<S> *> Params();
  std::vector<const Param<S> *> Params() const;
  std::size_t NumParams() const;
  void ZeroGrad();

  // Loss of one example.  With `backward`, gradients scaled by `scale` are
  // added to the parameters.  Returns +inf without touching gradients when a
  // CTC label cannot be aligned.
  double Loss(const ProbeExample &ex, bool backward, double scale = 1.0);

  // Raw head outputs: class logits (1 x C), frame log-probs (T x V), or masks
  // (STFT frames x num_masks*bins).
  Mat<S> Forward(const ProbeExample &ex) const;

  int PredictClass(const FeatureRecord &features) const;
  std::vector<int> Decode(const FeatureRecord &features) const;
  std::vector<Mat<float>> PredictMasks(const FeatureRecord &features,
                                       const std::vector<int> &frame_map) const;

  // Copies parameter values by name; throws InvalidArgument on mismatch.
  template <typename T>
  void CopyFrom(const Probe<T> &other);

  LayerAggregator<S> aggregator;
  std::vector<BlstmLayer<S>> blstm;
  Linear<S> head;

 private:
  struct Trace;
  Mat<S> RunTrunk(const FeatureRecord &features, Trace *trace) const;
  void BackwardTrunk(const Trace &trace, const Mat<S> &d_trunk);

  ProbeConfig config_;
};

// Checkpoint blob:
//   "MSPBPT" | u32 version | u64 config hash | u32 config JSON length | JSON |
//   u32 block count | per block: u16 name length, name, u32 rows, u32 cols,
//   rows*cols f32 little-endian
inline constexpr char kCheckpointMagic[6] = {'M', 'S', 'P', 'B', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string SerializeProbe(const Probe<float> &probe);
// Throws FormatError on a bad magic/version, hash mismatch or truncation.
Probe<float> DeserializeProbe(std::string_view bytes);
void SaveProbe(const std::filesystem::path &path, const Probe<float> &probe);
Probe<float> LoadProbe(const std::filesystem::path &path);

}  // namespace minibench

#endif  // MINIBENCH_PROBES_PROBE_H_
