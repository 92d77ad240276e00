// probes/layers.cc

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

#include "minibench/probes/layers.h"

#include <cmath>

#include "minibench/common.h"

namespace minibench {

namespace {

template <typename S>
void FillUniform(Param<S> *p, double bound, Rng *rng) {
  for (Eigen::Index i = 0; i < p->value.size(); ++i)
    p->value.data()[i] = static_cast<S>(rng->Uniform(-bound, bound));
  p->ZeroGrad();
}

}  // namespace

template <typename S>
std::vector<Mat<S>> LayerMatrices(const FeatureRecord &record, bool normalize) {
  std::vector<Mat<S>> out;
  out.reserve(record.num_layers);
  std::vector<float> frame(record.dim);
  for (int l = 0; l < record.num_layers; ++l) {
    Mat<S> m(record.num_frames, record.dim);
    for (int t = 0; t < record.num_frames; ++t) {
      auto src = record.Frame(l, t);
      if (normalize) {
        LayerNormFrame(src, frame);
        src = frame;
      }
      for (int d = 0; d < record.dim; ++d) m(t, d) = static_cast<S>(src[d]);
    }
    out.push_back(std::move(m));
  }
  return out;
}

template <typename S>
LayerAggregator<S>::LayerAggregator(int num_layers) : logits("aggregator.logits", num_layers, 1) {
  if (num_layers < 1) throw InvalidArgument("aggregator needs at least one layer");
}

template <typename S>
Vec<S> LayerAggregator<S>::Weights() const {
  Vec<S> z = logits.value.col(0);
  const S top = z.maxCoeff();
  Vec<S> e = (z.array() - top).exp().matrix();
  return e / e.sum();
}

template <typename S>
Mat<S> LayerAggregator<S>::Forward(const std::vector<Mat<S>> &layers) const {
  if (static_cast<int>(layers.size()) != num_layers())
    throw InvalidArgument("aggregator expects " + std::to_string(num_layers()) +
                          " layers, got " + std::to_string(layers.size()));
  const Vec<S> w = Weights();
  Mat<S> out = w(0) * layers[0];
  for (int l = 1; l < num_layers(); ++l) out += w(l) * layers[l];
  return out;
}

template <typename S>
void LayerAggregator<S>::Backward(const std::vector<Mat<S>> &layers, const Mat<S> &d_out) {
  const Vec<S> w = Weights();
  Vec<S> g(num_layers());
  for (int l = 0; l < num_layers(); ++l) g(l) = (layers[l].array() * d_out.array()).sum();
  const S mean = w.dot(g);
  for (int l = 0; l < num_layers(); ++l) logits.grad(l, 0) += w(l) * (g(l) - mean);
}

template <typename S>
Mat<S> WeightedSum(const FeatureRecord &record, const LayerAggregator<S> &agg, bool normalize) {
  return agg.Forward(LayerMatrices<S>(record, normalize));
}

template <typename S>
Linear<S>::Linear(const std::string &name, int in, int out)
    : weight(name + ".weight", out, in), bias(name + ".bias", out, 1) {}

template <typename S>
void Linear<S>::Init(Rng *rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim()));
  FillUniform(&weight, bound, rng);
  FillUniform(&bias, bound, rng);
}

template <typename S>
Mat<S> Linear<S>::Forward(const Mat<S> &x) const {
  Mat<S> y = x * weight.value.transpose();
  y.rowwise() += bias.value.col(0).transpose();
  return y;
}

template <typename S>
Mat<S> Linear<S>::Backward(const Mat<S> &x, const Mat<S> &d_y) {
  weight.grad.noalias() += d_y.transpose() * x;
  bias.grad.col(0) += d_y.colwise().sum().transpose();
  return d_y * weight.value;
}

template <typename S>
LstmDirection<S>::LstmDirection(const std::string &name, int input, int hidden, bool reverse)
    : w_ih(name + ".w_ih", 4 * hidden, input),
      w_hh(name + ".w_hh", 4 * hidden, hidden),
      bias(name + ".bias", 4 * hidden, 1),
      reverse_(reverse) {}

template <typename S>
void LstmDirection<S>::Init(Rng *rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim()));
  FillUniform(&w_ih, bound, rng);
  FillUniform(&w_hh, bound, rng);
  FillUniform(&bias, bound, rng);
}

template <typename S>
Mat<S> LstmDirection<S>::Forward(const Mat<S> &x, Cache *cache) const {
  const Eigen::Index T = x.rows();
  const int H = hidden_dim();
  Mat<S> pre = x * w_ih.value.transpose();
  pre.rowwise() += bias.value.col(0).transpose();

  cache->gates.resize(T, 4 * H);
  cache->cell.resize(T, H);
  cache->hidden.resize(T, H);
  cache->h_prev.resize(T, H);
  cache->c_prev.resize(T, H);

  RowVec<S> h = RowVec<S>::Zero(H), c = RowVec<S>::Zero(H);
  const Mat<S> w_hh_t = w_hh.value.transpose();
  for (Eigen::Index s = 0; s < T; ++s) {
    const Eigen::Index t = reverse_ ? T - 1 - s : s;
    cache->h_prev.row(t) = h;
    cache->c_prev.row(t) = c;
    RowVec<S> a = pre.row(t) + h * w_hh_t;
    for (int k = 0; k < H; ++k) {
      a(k) = Sigmoid(a(k));
      a(H + k) = Sigmoid(a(H + k));
      a(2 * H + k) = std::tanh(a(2 * H + k));
      a(3 * H + k) = Sigmoid(a(3 * H + k));
    }
    for (int k = 0; k < H; ++k) {
      c(k) = a(H + k) * c(k) + a(k) * a(2 * H + k);
      h(k) = a(3 * H + k) * std::tanh(c(k));
    }
    cache->gates.row(t) = a;
    cache->cell.row(t) = c;
    cache->hidden.row(t) = h;
  }
  return cache->hidden;
}

template <typename S>
Mat<S> LstmDirection<S>::Backward(const Mat<S> &x, const Cache &cache, const Mat<S> &d_h) {
  const Eigen::Index T = x.rows();
  const int H = hidden_dim();
  Mat<S> d_pre(T, 4 * H);
  RowVec<S> dh_next = RowVec<S>::Zero(H), dc_next = RowVec<S>::Zero(H);
  for (Eigen::Index s = T - 1; s >= 0; --s) {
    const Eigen::Index t = reverse_ ? T - 1 - s : s;
    const auto g = cache.gates.row(t);
    for (int k = 0; k < H; ++k) {
      const S i = g(k), f = g(H + k), cand = g(2 * H + k), o = g(3 * H + k);
      const S tc = std::tanh(cache.cell(t, k));
      const S dh = d_h(t, k) + dh_next(k);
      const S dc = dh * o * (S(1) - tc * tc) + dc_next(k);
      d_pre(t, k) = dc * cand * i * (S(1) - i);
      d_pre(t, H + k) = dc * cache.c_prev(t, k) * f * (S(1) - f);
      d_pre(t, 2 * H + k) = dc * i * (S(1) - cand * cand);
      d_pre(t, 3 * H + k) = dh * tc * o * (S(1) - o);
      dc_next(k) = dc * f;
    }
    dh_next = d_pre.row(t) * w_hh.value;
  }
  w_ih.grad.noalias() += d_pre.transpose() * x;
  w_hh.grad.noalias() += d_pre.transpose() * cache.h_prev;
  bias.grad.col(0) += d_pre.colwise().sum().transpose();
  return d_pre * w_ih.value;
}

template <typename S>
BlstmLayer<S>::BlstmLayer(const std::string &name, int input, int hidden)
    : fwd(name + ".fwd", input, hidden, false), bwd(name + ".bwd", input, hidden, true) {}

template <typename S>
void BlstmLayer<S>::Init(Rng *rng) {
  fwd.Init(rng);
  bwd.Init(rng);
}

template <typename S>
Mat<S> BlstmLayer<S>::Forward(const Mat<S> &x, Cache *cache) const {
  const int H = fwd.hidden_dim();
  Mat<S> out(x.rows(), 2 * H);
  out.leftCols(H) = fwd.Forward(x, &cache->fwd);
  out.rightCols(H) = bwd.Forward(x, &cache->bwd);
  return out;
}

template <typename S>
Mat<S> BlstmLayer<S>::Backward(const Mat<S> &x, const Cache &cache, const Mat<S> &d_out) {
  const int H = fwd.hidden_dim();
  Mat<S> df = d_out.leftCols(H), db = d_out.rightCols(H);
  Mat<S> dx = fwd.Backward(x, cache.fwd, df);
  dx += bwd.Backward(x, cache.bwd, db);
  return dx;
}

#define MINIBENCH_INSTANTIATE(S)                                                        \
  template std::vector<Mat<S>> LayerMatrices<S>(const FeatureRecord &, bool);            \
  template class LayerAggregator<S>;                                                    \
  template Mat<S> WeightedSum<S>(const FeatureRecord &, const LayerAggregator<S> &, bool); \
  template class Linear<S>;                                                             \
  template class LstmDirection<S>;                                                      \
  template class BlstmLayer<S>;

MINIBENCH_INSTANTIATE(float)
MINIBENCH_INSTANTIATE(double)
#undef MINIBENCH_INSTANTIATE

}  // namespace minibench
