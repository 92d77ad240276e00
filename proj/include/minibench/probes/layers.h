// minibench/probes/layers.h

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

#ifndef MINIBENCH_PROBES_LAYERS_H_
#define MINIBENCH_PROBES_LAYERS_H_

#include <string>
#include <vector>

#include "minibench/feature_cache.h"
#include "minibench/probes/tensor.h"
#include "minibench/rng.h"

namespace minibench {

// Layers of a record as T x D matrices, each frame layer-normalized when
// `normalize` is set.
template <typename S>
std::vector<Mat<S>> LayerMatrices(const FeatureRecord &record, bool normalize);

/// Softmax-weighted sum over upstream layers with trainable logits.
template <typename S>
class LayerAggregator {
 public:
  explicit LayerAggregator(int num_layers);

  int num_layers() const { return static_cast<int>(logits.value.rows()); }
  Vec<S> Weights() const;

  // Throws InvalidArgument on a layer-count mismatch.
  Mat<S> Forward(const std::vector<Mat<S>> &layers) const;
  // Accumulates d(loss)/d(logits) given d(loss)/d(output).
  void Backward(const std::vector<Mat<S>> &layers, const Mat<S> &d_out);

  Param<S> logits;  // L x 1
};

// Convenience form of the aggregator on a record.
template <typename S>
Mat<S> WeightedSum(const FeatureRecord &record, const LayerAggregator<S> &agg,
                   bool normalize);

/// y = x W^T + b on row-frames.
template <typename S>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string &name, int in, int out);
  int in_dim() const { return static_cast<int>(weight.value.cols()); }
  int out_dim() const { return static_cast<int>(weight.value.rows()); }
  void Init(Rng *rng);

  Mat<S> Forward(const Mat<S> &x) const;
  // Accumulates parameter gradients, returns d(loss)/d(x).
  Mat<S> Backward(const Mat<S> &x, const Mat<S> &d_y);

  Param<S> weight;  // out x in
  Param<S> bias;    // out x 1
};

/// One direction of an LSTM layer.  Gate order is input, forget, cell, output.
template <typename S>
class LstmDirection {
 public:
  struct Cache {
    Mat<S> gates;   // T x 4H post-activation
    Mat<S> cell;    // T x H
    Mat<S> hidden;  // T x H
    Mat<S> h_prev;  // T x H, the recurrent input of each step
    Mat<S> c_prev;  // T x H
  };

  LstmDirection() = default;
  LstmDirection(const std::string &name, int input, int hidden, bool reverse);
  int hidden_dim() const { return static_cast<int>(w_hh.value.cols()); }
  int input_dim() const { return static_cast<int>(w_ih.value.cols()); }
  bool reverse() const { return reverse_; }
  void Init(Rng *rng);

  Mat<S> Forward(const Mat<S> &x, Cache *cache) const;
  Mat<S> Backward(const Mat<S> &x, const Cache &cache, const Mat<S> &d_h);

  Param<S> w_ih;  // 4H x in
  Param<S> w_hh;  // 4H x H
  Param<S> bias;  // 4H x 1

 private:
  bool reverse_ = false;
};

/// Bidirectional LSTM layer; output is [forward, backward], width 2H.
template <typename S>
class BlstmLayer {
 public:
  struct Cache {
    typename LstmDirection<S>::Cache fwd, bwd;
  };

  BlstmLayer() = default;
  BlstmLayer(const std::string &name, int input, int hidden);
  void Init(Rng *rng);
  Mat<S> Forward(const Mat<S> &x, Cache *cache) const;
  Mat<S> Backward(const Mat<S> &x, const Cache &cache, const Mat<S> &d_out);

  LstmDirection<S> fwd;
  LstmDirection<S> bwd;
};

}  // namespace minibench

#endif  // MINIBENCH_PROBES_LAYERS_H_
