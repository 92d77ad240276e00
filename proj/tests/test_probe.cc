// tests/test_probe.cc

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

#include <cmath>
#include <memory>
#include <random>

#include "doctest.h"
#include "minibench/probes/grad_check.h"
#include "minibench/probes/probe.h"
#include "minibench/probes/trainer.h"
#include "oracles.h"

using namespace minibench;

namespace {

std::shared_ptr<const FeatureRecord> Features(int layers, int frames, int dim, std::uint64_t seed) {
  return std::make_shared<FeatureRecord>(mbtest::RandomRecord("x", layers, frames, dim, seed));
}

Mat<float> RandomUnit(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Mat<float> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(gen);
  return m;
}

ProbeConfig Small(HeadKind head) {
  ProbeConfig c;
  c.head = head;
  c.num_layers = 2;
  c.input_dim = 5;
  c.hidden = 3;
  c.blstm_layers = 2;
  c.num_outputs = head == HeadKind::kBlstmMask ? 4 : 3;
  return c;
}

ProbeExample Example(const ProbeConfig &c, std::uint64_t seed) {
  ProbeExample ex;
  ex.id = "ex";
  ex.features = Features(c.num_layers, 6, c.input_dim, seed);
  ex.label = 1;
  ex.tokens = {1, 2, 2};
  for (int k = 0; k < c.num_masks; ++k) ex.mask_targets.push_back(RandomUnit(4, c.num_outputs, seed + k));
  ex.mixture_magnitude = RandomUnit(4, c.num_outputs, seed + 9);
  ex.frame_map = {0, 2, 3, 5};
  return ex;
}

// Central differences over every parameter entry, computed here rather than
// through the library's checker.
double ProbeFdError(Probe<double> *probe, const ProbeExample &ex) {
  probe->ZeroGrad();
  probe->Loss(ex, true);
  double worst = 0.0;
  const double eps = 1e-5;
  for (Param<double> *p : probe->Params()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double keep = p->value.data()[i];
      p->value.data()[i] = keep + eps;
      const double up = probe->Loss(ex, false);
      p->value.data()[i] = keep - eps;
      const double down = probe->Loss(ex, false);
      p->value.data()[i] = keep;
      const double num = (up - down) / (2 * eps), ana = p->grad.data()[i];
      worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-6}));
    }
  }
  return worst;
}

bool SameParams(const Probe<float> &a, const Probe<float> &b) {
  const auto pa = a.Params(), pb = b.Params();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i)
    if (pa[i]->name != pb[i]->name || pa[i]->value != pb[i]->value) return false;
  return true;
}

}  // namespace

TEST_SUITE("probe") {

TEST_CASE("analytic gradients match finite differences for every head") {
  struct Variant {
    const char *name;
    HeadKind head;
    int masks;
    bool pit, magnitude, normalize;
  };
  const Variant variants[] = {
      {"sid", HeadKind::kLinearSid, 1, false, false, false},
      {"sid-norm", HeadKind::kLinearSid, 1, false, false, true},
      {"ctc", HeadKind::kBlstmCtc, 1, false, false, true},
      {"mask", HeadKind::kBlstmMask, 1, false, false, true},
      {"mask-pit", HeadKind::kBlstmMask, 2, true, false, true},
      {"mask-pit-magnitude", HeadKind::kBlstmMask, 2, true, true, false},
      {"mask-two-fixed", HeadKind::kBlstmMask, 2, false, false, true},
  };
  for (const auto &v : variants) {
    const std::string variant = v.name;
    CAPTURE(variant);
    ProbeConfig c = Small(v.head);
    c.num_masks = v.masks;
    c.pit = v.pit;
    c.magnitude_loss = v.magnitude;
    c.normalize_layers = v.normalize;
    c.mask_cap = 2.0;
    Probe<double> probe(c);
    probe.Init(5);
    // Non-zero logits so the aggregator path is exercised away from the mean.
    probe.aggregator.logits.value << 0.3, -0.4;
    const ProbeExample ex = Example(c, 11);
    CHECK(ProbeFdError(&probe, ex) < 1e-5);
    GradCheckOptions opts;
    opts.tolerance = 1e-5;
    const GradCheckReport rep = GradCheckProbe(&probe, ex, opts);
    CHECK(rep.passed);
    CHECK(rep.blocks.size() == probe.Params().size());
  }
}

TEST_CASE("gradient checker flags a wrong gradient") {
  ScalarFunction good = [](const std::vector<double> &x, std::vector<double> *g) {
    if (g) *g = {2 * x[0] * x[1], x[0] * x[0] + std::cos(x[1])};
    return x[0] * x[0] * x[1] + std::sin(x[1]);
  };
  ScalarFunction bad = [](const std::vector<double> &x, std::vector<double> *g) {
    if (g) *g = {2 * x[0] * x[1], x[0] * x[0]};
    return x[0] * x[0] * x[1] + std::sin(x[1]);
  };
  CHECK(GradCheckFunction("good", good, {0.7, -1.3}).passed);
  const auto rep = GradCheckFunction("bad", bad, {0.7, -1.3});
  CHECK_FALSE(rep.passed);
  CHECK(rep.failures.size() == 1);
}

TEST_CASE("checkpoint round trip is bit exact") {
  ProbeConfig c = Small(HeadKind::kBlstmMask);
  c.num_masks = 2;
  c.seed = 4;
  Probe<float> probe(c);
  probe.Init(4);
  const std::string blob = SerializeProbe(probe);
  CHECK(blob.substr(0, 6) == "MSPBPT");
  const Probe<float> back = DeserializeProbe(blob);
  CHECK(SameParams(probe, back));
  CHECK(back.config().Hash() == c.Hash());
  CHECK(SerializeProbe(back) == blob);

  mbtest::TempDir dir("probe");
  SaveProbe(dir / "p.bin", probe);
  CHECK(SameParams(LoadProbe(dir / "p.bin"), probe));
}

TEST_CASE("corrupt checkpoints are rejected") {
  Probe<float> probe(Small(HeadKind::kLinearSid));
  probe.Init(1);
  const std::string blob = SerializeProbe(probe);
  std::string bad = blob;
  bad[0] = 'X';
  CHECK_THROWS_AS(DeserializeProbe(bad), FormatError);
  bad = blob;
  bad[6] = 9;  // version
  CHECK_THROWS_AS(DeserializeProbe(bad), FormatError);
  bad = blob;
  bad[10] ^= 1;  // config hash
  CHECK_THROWS_AS(DeserializeProbe(bad), FormatError);
  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, blob.size() / 2, blob.size() - 1})
    CHECK_THROWS_AS(DeserializeProbe(blob.substr(0, cut)), FormatError);
}

TEST_CASE("zero learning rate leaves the initial parameters") {
  ProbeConfig c = Small(HeadKind::kBlstmCtc);
  c.optimizer.lr = 0.0;
  c.steps = 5;
  c.batch_size = 2;
  c.seed = 9;
  const std::vector<ProbeExample> train = {Example(c, 1), Example(c, 2)};
  const TrainedProbe t = TrainProbe(c, train);
  Probe<float> init(c);
  init.Init(9);
  CHECK(SameParams(t.probe, init));
  CHECK(t.curve.back().step == 5);
}

TEST_CASE("training is deterministic") {
  ProbeConfig c = Small(HeadKind::kBlstmMask);
  c.num_masks = 2;
  c.steps = 6;
  c.batch_size = 2;
  c.log_every = 2;
  c.eval_every = 3;
  c.seed = 21;
  c.optimizer.lr = 0.05;
  const std::vector<ProbeExample> train = {Example(c, 1), Example(c, 2), Example(c, 3)};
  int calls = 0;
  DevMetricFn dev = [&](const Probe<float> &) { return static_cast<double>(++calls % 2); };
  const TrainedProbe a = TrainProbe(c, train, dev);
  calls = 0;
  const TrainedProbe b = TrainProbe(c, train, dev);
  CHECK(SerializeProbe(a.probe) == SerializeProbe(b.probe));
  CHECK(CurveToTsv(a.curve) == CurveToTsv(b.curve));
  CHECK(a.best_step == 3);
  c.seed = 22;
  CHECK(SerializeProbe(TrainProbe(c, train).probe) != SerializeProbe(a.probe));
}

TEST_CASE("separable speakers are learned perfectly") {
  const int classes = 3, dim = 4;
  ProbeConfig c;
  c.head = HeadKind::kLinearSid;
  c.num_layers = 1;
  c.input_dim = dim;
  c.num_outputs = classes;
  c.normalize_layers = false;
  c.steps = 200;
  c.batch_size = 6;
  c.optimizer.lr = 0.05;
  c.seed = 3;
  std::mt19937_64 gen(8);
  std::normal_distribution<float> noise(0.0f, 0.3f);
  auto make = [&](int label) {
    auto rec = std::make_shared<FeatureRecord>("u", 1, 8, dim);
    for (int t = 0; t < 8; ++t)
      for (int d = 0; d < dim; ++d) rec->at(0, t, d) = (d == label ? 3.0f : 0.0f) + noise(gen);
    ProbeExample ex;
    ex.features = rec;
    ex.label = label;
    return ex;
  };
  std::vector<ProbeExample> train, test;
  for (int i = 0; i < 30; ++i) train.push_back(make(i % classes));
  for (int i = 0; i < 15; ++i) test.push_back(make(i % classes));
  const TrainedProbe t = TrainProbe(c, train);
  int correct = 0;
  for (const auto &ex : test) correct += t.probe.PredictClass(*ex.features) == ex.label;
  CHECK(correct == 15);
  CHECK(t.curve.back().loss < t.curve.front().loss);
}

TEST_CASE("unalignable recognition examples are skipped") {
  ProbeConfig c = Small(HeadKind::kBlstmCtc);
  c.steps = 2;
  c.batch_size = 1;
  ProbeExample short_ex = Example(c, 1);
  short_ex.features = Features(2, 2, 5, 3);
  short_ex.tokens = {1, 1};  // needs three frames
  const TrainedProbe t = TrainProbe(c, {short_ex, Example(c, 2)});
  CHECK(t.skipped_examples == 1);
  Probe<double> p(c);
  p.Init(1);
  CHECK(std::isinf(p.Loss(short_ex, false)));
  CHECK_THROWS_AS(TrainProbe(c, {short_ex}), InvalidArgument);
}

TEST_CASE("config validation") {
  ProbeConfig c = Small(HeadKind::kBlstmMask);
  c.num_masks = 1;
  c.pit = true;
  CHECK_THROWS_AS(c.Validate(), InvalidArgument);
  c = Small(HeadKind::kBlstmCtc);
  c.num_outputs = 1;
  CHECK_THROWS_AS(c.Validate(), InvalidArgument);
  c = Small(HeadKind::kLinearSid);
  CHECK(ProbeConfig::FromJson(c.ToJson()).Hash() == c.Hash());
  c.optimizer.lr = -1;
  CHECK_THROWS_AS(c.Validate(), InvalidArgument);
}

}  // TEST_SUITE
