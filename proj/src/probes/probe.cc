// probes/probe.cc

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

#include "minibench/probes/probe.h"

#include <bit>
#include <cmath>
#include <limits>
#include <map>

#include "minibench/common.h"
#include "minibench/probes/ctc.h"
#include "minibench/probes/mask.h"
#include "minibench/rng.h"

namespace minibench {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

const char *HeadKindName(HeadKind kind) {
  switch (kind) {
    case HeadKind::kLinearSid: return "linear_sid";
    case HeadKind::kBlstmCtc: return "blstm_ctc";
    case HeadKind::kBlstmMask: return "blstm_mask";
  }
  return "?";
}

void ProbeConfig::Validate() const {
  auto fail = [](const std::string &m) { throw InvalidArgument("probe config: " + m); };
  if (num_layers < 1) fail("num_layers must be >= 1");
  if (input_dim < 1) fail("input_dim must be >= 1");
  if (head == HeadKind::kBlstmCtc && num_outputs < 2) fail("vocabulary needs blank plus a token");
  if (head != HeadKind::kBlstmCtc && num_outputs < 1) fail("num_outputs must be >= 1");
  if (head != HeadKind::kLinearSid) {
    if (hidden < 1 || blstm_layers < 1) fail("BLSTM needs hidden >= 1 and layers >= 1");
  }
  if (head == HeadKind::kBlstmMask) {
    if (num_masks != 1 && num_masks != 2) fail("num_masks must be 1 or 2");
    if (pit && num_masks != 2) fail("permutation invariance needs 2 masks");
    if (!(mask_cap > 0.0)) fail("mask_cap must be > 0");
  }
  if (steps < 0 || batch_size < 1 || log_every < 1 || eval_every < 1)
    fail("steps >= 0, batch_size, log_every and eval_every >= 1 required");
  optimizer.Validate();
}

json ProbeConfig::ToJson() const {
  json j = {{"head", HeadKindName(head)},
            {"num_layers", num_layers},
            {"input_dim", input_dim},
            {"num_outputs", num_outputs},
            {"normalize_layers", normalize_layers},
            {"optimizer", optimizer.ToJson()},
            {"steps", steps},
            {"batch_size", batch_size},
            {"log_every", log_every},
            {"eval_every", eval_every},
            {"seed", seed}};
  if (head != HeadKind::kLinearSid) {
    j["hidden"] = hidden;
    j["blstm_layers"] = blstm_layers;
  }
  if (head == HeadKind::kBlstmMask) {
    j["num_masks"] = num_masks;
    j["mask_cap"] = mask_cap;
    j["pit"] = pit;
    j["magnitude_loss"] = magnitude_loss;
  }
  return j;
}

ProbeConfig ProbeConfig::FromJson(const json &j) {
  ProbeConfig c;
  const std::string head = j.value("head", std::string("linear_sid"));
  if (head == "linear_sid") c.head = HeadKind::kLinearSid;
  else if (head == "blstm_ctc") c.head = HeadKind::kBlstmCtc;
  else if (head == "blstm_mask") c.head = HeadKind::kBlstmMask;
  else throw InvalidArgument("unknown probe head '" + head + "'");
  c.num_layers = j.value("num_layers", c.num_layers);
  c.input_dim = j.value("input_dim", c.input_dim);
  c.num_outputs = j.value("num_outputs", c.num_outputs);
  c.hidden = j.value("hidden", c.hidden);
  c.blstm_layers = j.value("blstm_layers", c.blstm_layers);
  c.num_masks = j.value("num_masks", c.num_masks);
  c.mask_cap = j.value("mask_cap", c.mask_cap);
  c.pit = j.value("pit", c.num_masks == 2);
  c.magnitude_loss = j.value("magnitude_loss", c.magnitude_loss);
  c.normalize_layers = j.value("normalize_layers", c.normalize_layers);
  if (j.contains("optimizer")) c.optimizer = OptimizerOptions::FromJson(j.at("optimizer"));
  c.steps = j.value("steps", c.steps);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.log_every = j.value("log_every", c.log_every);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.seed = j.value("seed", c.seed);
  c.Validate();
  return c;
}

std::uint64_t ProbeConfig::Hash() const { return Fnv1a64(ToJson().dump()); }

template <typename S>
struct Probe<S>::Trace {
  std::vector<Mat<S>> layers;
  std::vector<Mat<S>> inputs;  // input of each BLSTM layer
  std::vector<typename BlstmLayer<S>::Cache> caches;
  Mat<S> trunk;
};

template <typename S>
Probe<S>::Probe(const ProbeConfig &config) : aggregator(config.num_layers), config_(config) {
  config_.Validate();
  int width = config_.input_dim;
  if (config_.head != HeadKind::kLinearSid) {
    for (int l = 0; l < config_.blstm_layers; ++l) {
      blstm.emplace_back("blstm." + std::to_string(l), width, config_.hidden);
      width = 2 * config_.hidden;
    }
  }
  const int outputs =
      config_.head == HeadKind::kBlstmMask ? config_.num_masks * config_.num_outputs
                                           : config_.num_outputs;
  head = Linear<S>("head", width, outputs);
}

template <typename S>
void Probe<S>::Init(std::uint64_t seed) {
  Rng rng(Rng::Derive(seed, "probe-init"));
  aggregator.logits.value.setZero();
  aggregator.logits.ZeroGrad();
  for (auto &layer : blstm) layer.Init(&rng);
  head.Init(&rng);
}

template <typename S>
std::vector<Param<S> *> Probe<S>::Params() {
  std::vector<Param<S> *> out = {&aggregator.logits};
  for (auto &layer : blstm) {
    for (auto *dir : {&layer.fwd, &layer.bwd}) {
      out.push_back(&dir->w_ih);
      out.push_back(&dir->w_hh);
      out.push_back(&dir->bias);
    }
  }
  out.push_back(&head.weight);
  out.push_back(&head.bias);
  return out;
}

template <typename S>
std::vector<const Param<S> *> Probe<S>::Params() const {
  auto mut = const_cast<Probe<S> *>(this)->Params();
  return {mut.begin(), mut.end()};
}

template <typename S>
std::size_t Probe<S>::NumParams() const {
  std::size_t n = 0;
  for (const auto *p : Params()) n += static_cast<std::size_t>(p->size());
  return n;
}

template <typename S>
void Probe<S>::ZeroGrad() {
  for (auto *p : Params()) p->ZeroGrad();
}

template <typename S>
Mat<S> Probe<S>::RunTrunk(const FeatureRecord &features, Trace *trace) const {
  if (features.dim != config_.input_dim)
    throw InvalidArgument("probe expects feature dim " + std::to_string(config_.input_dim) +
                          ", got " + std::to_string(features.dim));
  trace->layers = LayerMatrices<S>(features, config_.normalize_layers);
  Mat<S> x = aggregator.Forward(trace->layers);
  trace->inputs.clear();
  trace->caches.assign(blstm.size(), {});
  for (std::size_t l = 0; l < blstm.size(); ++l) {
    trace->inputs.push_back(x);
    x = blstm[l].Forward(trace->inputs.back(), &trace->caches[l]);
  }
  trace->trunk = x;
  return x;
}

template <typename S>
void Probe<S>::BackwardTrunk(const Trace &trace, const Mat<S> &d_trunk) {
  Mat<S> d = d_trunk;
  for (std::size_t l = blstm.size(); l-- > 0;)
    d = blstm[l].Backward(trace.inputs[l], trace.caches[l], d);
  aggregator.Backward(trace.layers, d);
}

namespace {

template <typename S>
Mat<S> LogSoftmaxRows(const Mat<S> &z) {
  Mat<S> out(z.rows(), z.cols());
  for (Eigen::Index t = 0; t < z.rows(); ++t) {
    const S top = z.row(t).maxCoeff();
    const S lse = top + std::log((z.row(t).array() - top).exp().sum());
    out.row(t) = z.row(t).array() - lse;
  }
  return out;
}

void CheckFrameMap(const std::vector<int> &map, Eigen::Index frames) {
  if (map.empty()) throw InvalidArgument("mask probe needs a non-empty frame map");
  for (int t : map)
    if (t < 0 || t >= frames) throw InvalidArgument("frame map entry out of range");
}

}  // namespace

template <typename S>
Mat<S> Probe<S>::Forward(const ProbeExample &ex) const {
  if (!ex.features) throw InvalidArgument("example '" + ex.id + "' has no features");
  Trace trace;
  const Mat<S> trunk = RunTrunk(*ex.features, &trace);
  switch (config_.head) {
    case HeadKind::kLinearSid:
      return head.Forward(Mat<S>(trunk.colwise().mean()));
    case HeadKind::kBlstmCtc:
      return LogSoftmaxRows<S>(head.Forward(trunk));
    case HeadKind::kBlstmMask: {
      CheckFrameMap(ex.frame_map, trunk.rows());
      Mat<S> g(ex.frame_map.size(), trunk.cols());
      for (std::size_t m = 0; m < ex.frame_map.size(); ++m) g.row(m) = trunk.row(ex.frame_map[m]);
      Mat<S> z = head.Forward(g);
      const S cap = static_cast<S>(config_.mask_cap);
      return z.unaryExpr([cap](S v) { return cap * Sigmoid(v); });
    }
  }
  return {};
}

template <typename S>
double Probe<S>::Loss(const ProbeExample &ex, bool backward, double scale) {
  if (!ex.features) throw InvalidArgument("example '" + ex.id + "' has no features");
  Trace trace;
  const Mat<S> trunk = RunTrunk(*ex.features, &trace);
  const S s = static_cast<S>(scale);

  switch (config_.head) {
    case HeadKind::kLinearSid: {
      if (ex.label < 0 || ex.label >= config_.num_outputs)
        throw InvalidArgument("example '" + ex.id + "' has an out-of-range class label");
      const Mat<S> pooled = trunk.colwise().mean();
      const Mat<S> lp = LogSoftmaxRows<S>(head.Forward(pooled));
      const double loss = -static_cast<double>(lp(0, ex.label));
      if (backward) {
        Mat<S> dz = lp.array().exp().matrix();
        dz(0, ex.label) -= S(1);
        dz *= s;
        const Mat<S> dpooled = head.Backward(pooled, dz);
        const Mat<S> dtrunk =
            dpooled.replicate(trunk.rows(), 1) / static_cast<S>(trunk.rows());
        BackwardTrunk(trace, dtrunk);
      }
      return loss;
    }
    case HeadKind::kBlstmCtc: {
      const Mat<S> z = head.Forward(trunk);
      const Mat<S> lp = LogSoftmaxRows<S>(z);
      CtcResult ctc = CtcLoss(lp, ex.tokens, 0, backward);
      if (!ctc.feasible) return std::numeric_limits<double>::infinity();
      const double norm = static_cast<double>(std::max<std::size_t>(1, ex.tokens.size()));
      if (backward) {
        // d/dz of a function of log_softmax(z): g - softmax * rowsum(g).
        const Mat<double> g = ctc.grad / norm;
        const Mat<double> p = lp.template cast<double>().array().exp().matrix();
        Mat<double> dz = g - (p.array().colwise() * g.rowwise().sum().array()).matrix();
        const Mat<S> dzs = dz.cast<S>() * s;
        BackwardTrunk(trace, head.Backward(trunk, dzs));
      }
      return ctc.loss / norm;
    }
    case HeadKind::kBlstmMask: {
      CheckFrameMap(ex.frame_map, trunk.rows());
      const int bins = config_.num_outputs;
      const auto frames = static_cast<Eigen::Index>(ex.frame_map.size());
      if (static_cast<int>(ex.mask_targets.size()) != config_.num_masks)
        throw InvalidArgument("example '" + ex.id + "' has the wrong number of mask targets");
      Mat<S> g(frames, trunk.cols());
      for (Eigen::Index m = 0; m < frames; ++m) g.row(m) = trunk.row(ex.frame_map[m]);
      const Mat<S> z = head.Forward(g);
      const S cap = static_cast<S>(config_.mask_cap);
      const Mat<S> sig = z.unaryExpr([](S v) { return Sigmoid(v); });

      std::vector<Mat<S>> pred, target;
      for (int k = 0; k < config_.num_masks; ++k) {
        const auto &tgt = ex.mask_targets[k];
        if (tgt.rows() != frames || tgt.cols() != bins)
          throw InvalidArgument("example '" + ex.id + "' mask target shape mismatch");
        Mat<S> p = cap * sig.middleCols(k * bins, bins);
        Mat<S> t = tgt.template cast<S>();
        if (config_.magnitude_loss) {
          const Mat<S> mag = ex.mixture_magnitude.template cast<S>();
          if (mag.rows() != frames || mag.cols() != bins)
            throw InvalidArgument("example '" + ex.id + "' needs the mixture magnitude");
          p = p.cwiseProduct(mag);
          t = t.cwiseProduct(mag);
        }
        pred.push_back(std::move(p));
        target.push_back(std::move(t));
      }
      std::vector<Mat<S>> dpred;
      const MaskLoss ml =
          MaskObjective(pred, target, config_.pit, backward ? &dpred : nullptr);
      if (backward) {
        Mat<S> dz(frames, z.cols());
        for (int k = 0; k < config_.num_masks; ++k) {
          Mat<S> dp = dpred[k];
          if (config_.magnitude_loss)
            dp = dp.cwiseProduct(ex.mixture_magnitude.template cast<S>());
          const auto sk = sig.middleCols(k * bins, bins).array();
          dz.middleCols(k * bins, bins) = (dp.array() * cap * sk * (S(1) - sk)).matrix();
        }
        dz *= s;
        const Mat<S> dg = head.Backward(g, dz);
        Mat<S> dtrunk = Mat<S>::Zero(trunk.rows(), trunk.cols());
        for (Eigen::Index m = 0; m < frames; ++m) dtrunk.row(ex.frame_map[m]) += dg.row(m);
        BackwardTrunk(trace, dtrunk);
      }
      return ml.loss;
    }
  }
  return 0.0;
}

template <typename S>
int Probe<S>::PredictClass(const FeatureRecord &features) const {
  ProbeExample ex;
  ex.features = std::shared_ptr<const FeatureRecord>(&features, [](const FeatureRecord *) {});
  Eigen::Index best;
  Forward(ex).row(0).maxCoeff(&best);
  return static_cast<int>(best);
}

template <typename S>
std::vector<int> Probe<S>::Decode(const FeatureRecord &features) const {
  ProbeExample ex;
  ex.features = std::shared_ptr<const FeatureRecord>(&features, [](const FeatureRecord *) {});
  return CtcGreedyDecode(Forward(ex), 0);
}

template <typename S>
std::vector<Mat<float>> Probe<S>::PredictMasks(const FeatureRecord &features,
                                               const std::vector<int> &frame_map) const {
  ProbeExample ex;
  ex.features = std::shared_ptr<const FeatureRecord>(&features, [](const FeatureRecord *) {});
  ex.frame_map = frame_map;
  const Mat<S> all = Forward(ex);
  std::vector<Mat<float>> out;
  for (int k = 0; k < config_.num_masks; ++k)
    out.push_back(all.middleCols(k * config_.num_outputs, config_.num_outputs).template cast<float>());
  return out;
}

template <typename S>
template <typename T>
void Probe<S>::CopyFrom(const Probe<T> &other) {
  auto src = other.Params();
  auto dst = Params();
  if (src.size() != dst.size()) throw InvalidArgument("probe copy: parameter count mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (src[i]->name != dst[i]->name || src[i]->value.rows() != dst[i]->value.rows() ||
        src[i]->value.cols() != dst[i]->value.cols())
      throw InvalidArgument("probe copy: block '" + dst[i]->name + "' does not match");
    dst[i]->value = src[i]->value.template cast<S>();
    dst[i]->ZeroGrad();
  }
}

std::string SerializeProbe(const Probe<float> &probe) {
  const ProbeConfig &config = probe.config();
  const std::string cfg = config.ToJson().dump();
  std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
  PutLE<std::uint32_t>(&out, kCheckpointVersion);
  PutLE<std::uint64_t>(&out, config.Hash());
  PutLE<std::uint32_t>(&out, static_cast<std::uint32_t>(cfg.size()));
  out += cfg;
  const auto params = probe.Params();
  PutLE<std::uint32_t>(&out, static_cast<std::uint32_t>(params.size()));
  for (const auto *p : params) {
    PutLE<std::uint16_t>(&out, static_cast<std::uint16_t>(p->name.size()));
    out += p->name;
    PutLE<std::uint32_t>(&out, static_cast<std::uint32_t>(p->value.rows()));
    PutLE<std::uint32_t>(&out, static_cast<std::uint32_t>(p->value.cols()));
    out.append(reinterpret_cast<const char *>(p->value.data()),
               static_cast<std::size_t>(p->value.size()) * sizeof(float));
  }
  return out;
}

Probe<float> DeserializeProbe(std::string_view b) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (b.size() - pos < n) throw FormatError("checkpoint truncated at byte " + std::to_string(pos));
  };
  need(sizeof(kCheckpointMagic) + 16);
  if (b.substr(0, sizeof(kCheckpointMagic)) != std::string_view(kCheckpointMagic, 6))
    throw FormatError("checkpoint: bad magic");
  pos = sizeof(kCheckpointMagic);
  if (GetLE<std::uint32_t>(b, pos) != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version");
  const auto hash = GetLE<std::uint64_t>(b, pos + 4);
  const auto cfg_len = GetLE<std::uint32_t>(b, pos + 12);
  pos += 16;
  need(cfg_len);
  ProbeConfig config;
  try {
    config = ProbeConfig::FromJson(json::parse(b.substr(pos, cfg_len)));
  } catch (const json::exception &e) {
    throw FormatError(std::string("checkpoint: bad config: ") + e.what());
  }
  if (config.Hash() != hash) throw FormatError("checkpoint: config hash mismatch");
  pos += cfg_len;

  Probe<float> probe(config);
  auto params = probe.Params();
  need(4);
  if (GetLE<std::uint32_t>(b, pos) != params.size())
    throw FormatError("checkpoint: parameter block count mismatch");
  pos += 4;
  for (auto *p : params) {
    need(2);
    const auto name_len = GetLE<std::uint16_t>(b, pos);
    pos += 2;
    need(name_len + 8u);
    if (b.substr(pos, name_len) != p->name)
      throw FormatError("checkpoint: expected block '" + p->name + "'");
    pos += name_len;
    const auto rows = GetLE<std::uint32_t>(b, pos), cols = GetLE<std::uint32_t>(b, pos + 4);
    pos += 8;
    if (rows != p->value.rows() || cols != p->value.cols())
      throw FormatError("checkpoint: block '" + p->name + "' has the wrong shape");
    const std::size_t bytes = static_cast<std::size_t>(rows) * cols * sizeof(float);
    need(bytes);
    std::memcpy(p->value.data(), b.data() + pos, bytes);
    pos += bytes;
  }
  if (pos != b.size()) throw FormatError("checkpoint: trailing bytes");
  return probe;
}

void SaveProbe(const std::filesystem::path &path, const Probe<float> &probe) {
  WriteFileAtomic(path, SerializeProbe(probe));
}

Probe<float> LoadProbe(const std::filesystem::path &path) {
  return DeserializeProbe(ReadFileBytes(path));
}

template class Probe<float>;
template class Probe<double>;
template void Probe<float>::CopyFrom<float>(const Probe<float> &);
template void Probe<float>::CopyFrom<double>(const Probe<double> &);
template void Probe<double>::CopyFrom<float>(const Probe<float> &);
template void Probe<double>::CopyFrom<double>(const Probe<double> &);

}  // namespace minibench
