// tests/test_cost.cc

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

#include "doctest.h"
#include "minibench/common.h"
#include "minibench/cost_model.h"
#include "oracles.h"

using namespace minibench;

namespace {

CostInputs Inputs(double cu, double cd, double s_full, double s_mini, double s_f, double r) {
  CostInputs ci;
  ci.upstream_macs = cu;
  ci.downstream_macs = cd;
  ci.steps_full = s_full;
  ci.steps_mini = s_mini;
  ci.extraction_passes = s_f;
  ci.backward_ratio = r;
  return ci;
}

// Counts multiply-adds by walking the loops of a dense layer.
double LoopCountLinear(std::int64_t in, std::int64_t out, std::int64_t frames) {
  double n = 0;
  for (std::int64_t t = 0; t < frames; ++t)
    for (std::int64_t o = 0; o < out; ++o)
      for (std::int64_t i = 0; i < in; ++i) n += 1;
  return n;
}

double LoopCountConv(const Conv1dSpec &c, std::int64_t frames) {
  double n = 0;
  for (std::int64_t start = 0; start + c.kernel <= frames; start += c.stride)
    for (std::int64_t o = 0; o < c.out_ch; ++o)
      for (std::int64_t i = 0; i < c.in_ch; ++i)
        for (std::int64_t k = 0; k < c.kernel; ++k) n += 1;
  return n;
}

Interval SumIntervals(const std::vector<std::string> &cells) {
  Interval s;
  for (const auto &c : cells) {
    const Interval i = PrintedInterval(c);
    s.lo += i.lo;
    s.hi += i.hi;
  }
  return s;
}

double SumValues(const std::vector<std::string> &cells) {
  double s = 0;
  for (const auto &c : cells) s += std::stod(c);
  return s;
}

}  // namespace

TEST_SUITE("cost") {

TEST_CASE("full and reduced training cost by hand") {
  CHECK(CostFullBenchmark(Inputs(1e9, 1e8, 1e5, 0, 0, 2)) == 1.3e14);
  CHECK(CostMiniBenchmark(Inputs(1e9, 1e8, 1e5, 1e4, 1e3, 2)) == 4e12);
  CHECK(CostFullBenchmark(Inputs(1e9, 1e8, 0, 0, 0, 2)) == 0.0);
  CHECK(CostMiniBenchmark(Inputs(1e9, 1e8, 1e5, 0, 0, 2)) == 0.0);
  CHECK(CostFullBenchmark(Inputs(7, 5, 3, 0, 0, 0)) == 7 * 3 + 5 * 3);
  CHECK(CostMiniBenchmark(Inputs(1e9, 1e8, 1e5, 1e4, 1e3, 2)) <
        CostFullBenchmark(Inputs(1e9, 1e8, 1e5, 1e4, 1e3, 2)));
  CHECK_THROWS_AS(Inputs(-1, 1, 1, 1, 1, 2).Validate(), InvalidArgument);
}

TEST_CASE("costs are linear in the per-pass MACs") {
  const CostInputs a = Inputs(3e8, 2e7, 5e4, 4e3, 7e2, 2), b = Inputs(5e8, 9e7, 5e4, 4e3, 7e2, 2);
  const CostInputs sum = Inputs(8e8, 11e7, 5e4, 4e3, 7e2, 2);
  CHECK(CostFullBenchmark(sum) ==
        doctest::Approx(CostFullBenchmark(a) + CostFullBenchmark(b)).epsilon(1e-15));
  CHECK(CostMiniBenchmark(sum) ==
        doctest::Approx(CostMiniBenchmark(a) + CostMiniBenchmark(b)).epsilon(1e-15));
}

TEST_CASE("layer MACs") {
  std::int64_t out = 0;
  CHECK(LayerMacs(LinearSpec{4, 3}, 2, &out) == 24);
  CHECK(LayerMacs(LinearSpec{4, 3}, 2, &out) == LoopCountLinear(4, 3, 2));
  CHECK(out == 2);
  CHECK(LayerMacs(LstmSpec{2, 3, false}, 2, &out) == 120);
  CHECK(LayerMacs(LstmSpec{2, 3, true}, 2, &out) == 240);
  const Conv1dSpec conv{2, 3, 4, 2};
  for (std::int64_t frames : {4, 9, 10, 33}) {
    CHECK(LayerMacs(conv, frames, &out) == LoopCountConv(conv, frames));
    CHECK(out == (frames - 4) / 2 + 1);
  }
  CHECK(LayerMacs(conv, 3, &out) == 0);
  CHECK(out == 0);
  CHECK(LayerMacs(AttentionSpec{4, 8, 2}, 3, &out) == (4 * 16 + 2 * 4 * 8) * 3 + 2 * 4 * 9);
}

TEST_CASE("forward MACs are additive over utterances and layers") {
  const ArchSpec arch = ArchSpec::FromJson(
      {{"name", "toy"},
       {"layers",
        {{{"type", "conv1d"}, {"in", 1}, {"out", 8}, {"kernel", 10}, {"stride", 5}},
         {{"type", "attention"}, {"d_model", 8}, {"ff_dim", 16}, {"repeat", 2}},
         {{"type", "linear"}, {"in", 8}, {"out", 3}}}}});
  REQUIRE(arch.layers.size() == 4);
  const std::vector<std::int64_t> sched = {100, 250, 40};
  double per_utt = 0;
  for (auto n : sched) per_utt += ForwardMacs(arch, std::vector<std::int64_t>{n});
  CHECK(ForwardMacs(arch, sched) == per_utt);

  double by_layer = 0;
  std::int64_t frames = 100, next = 0;
  for (const auto &l : arch.layers) {
    by_layer += LayerMacs(l, frames, &next);
    frames = next;
  }
  CHECK(ForwardMacs(arch, std::vector<std::int64_t>{100}) == by_layer);
  CHECK_THROWS_AS(ForwardMacs(arch, std::vector<std::int64_t>{}), InvalidArgument);
  CHECK(ArchSpec::FromJson(arch.ToJson()).layers.size() == 4);
  CHECK_THROWS_AS(ArchSpec::FromJson({{"layers", {{{"type", "linear"}, {"in", 0}, {"out", 2}}}}}),
                  InvalidArgument);
  CHECK_THROWS_AS(ArchSpec::FromJson({{"layers", {{{"type", "gru"}}}}}), InvalidArgument);
}

TEST_CASE("probe architecture") {
  const ArchSpec a = BlstmProbeArch(768, 256, 3, 32);
  REQUIRE(a.layers.size() == 4);
  std::int64_t out = 0;
  const double expect = LayerMacs(LstmSpec{768, 256, true}, 10, &out) +
                        2 * LayerMacs(LstmSpec{512, 256, true}, 10, &out) +
                        LayerMacs(LinearSpec{512, 32}, 10, &out);
  CHECK(ForwardMacs(a, std::vector<std::int64_t>{10}) == expect);
}

TEST_CASE("printed intervals") {
  const Interval a = PrintedInterval("8.2E+16");
  CHECK(a.lo == doctest::Approx(8.15e16));
  CHECK(a.hi == doctest::Approx(8.25e16));
  const Interval b = PrintedInterval("6E+16");
  CHECK(b.lo == doctest::Approx(5.5e16));
  CHECK(b.hi == doctest::Approx(6.5e16));
  const Interval c = PrintedInterval("97.4680");
  CHECK(c.hi - c.lo == doctest::Approx(1e-4));
  CHECK_THROWS_AS(PrintedInterval("9.0E+15x"), InvalidArgument);
}

TEST_CASE("published cost table is self-consistent") {
  for (const auto &row : mbtest::PrintedCosts()) {
    CAPTURE(row.model);
    CHECK(SumIntervals(row.full).Overlaps(PrintedInterval(row.full_total)));
    CHECK(SumIntervals(row.mini).Overlaps(PrintedInterval(row.mini_total)));
    const double full = SumValues(row.full), mini = SumValues(row.mini);
    CHECK(std::abs(ReductionPercent(full, mini) - row.reduction_pct) <= 0.05);

    CostReport rep;
    rep.tasks = {"ASR", "SID", "SE", "SS"};
    std::map<std::string, double> f, m;
    for (std::size_t t = 0; t < 4; ++t) {
      f[rep.tasks[t]] = std::stod(row.full[t]);
      m[rep.tasks[t]] = std::stod(row.mini[t]);
    }
    rep.AddRow(row.model, f, m);
    CHECK(rep.rows[0].total_full == doctest::Approx(full).epsilon(1e-15));
    CHECK(rep.rows[0].reduction_pct == doctest::Approx(ReductionPercent(full, mini)));
  }
  const auto &fbank = mbtest::PrintedCosts().back();
  CHECK(ReductionPercent(SumValues(fbank.full), SumValues(fbank.mini)) ==
        doctest::Approx(97.893).epsilon(1e-5));
}

TEST_CASE("reduction is scale invariant and zero for equal costs") {
  CHECK(ReductionPercent(5e17, 5e17) == 0.0);
  const double r = ReductionPercent(3.3e18, 8.2e16);
  CHECK(ReductionPercent(3.3e18 * 7.0, 8.2e16 * 7.0) == doctest::Approx(r).epsilon(1e-14));
}

TEST_CASE("report requires the same task set") {
  CostReport rep;
  rep.tasks = {"ASR", "SID"};
  CHECK_THROWS_AS(rep.AddRow("m", {{"ASR", 1.0}}, {{"ASR", 1.0}, {"SID", 1.0}}), InvalidArgument);
  rep.AddRow("m", {{"ASR", 4.0}, {"SID", 6.0}}, {{"ASR", 1.0}, {"SID", 1.0}});
  CHECK(rep.rows[0].total_mini == 2.0);
  CHECK(rep.rows[0].reduction_pct == doctest::Approx(80.0));
  CHECK(rep.ToTsv().find("m\t") != std::string::npos);
}

}  // TEST_SUITE
