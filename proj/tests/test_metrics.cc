// tests/test_metrics.cc

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
#include <fstream>
#include <random>

#include "doctest.h"
#include "minibench/common.h"
#include "minibench/metrics.h"
#include "minibench/wav.h"
#include "oracles.h"

using namespace minibench;

namespace {

std::vector<double> Gaussian(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> x(n);
  for (auto &v : x) v = g(gen);
  return x;
}

std::vector<double> Scaled(const std::vector<double> &x, double c) {
  std::vector<double> y(x);
  for (auto &v : y) v *= c;
  return y;
}

// Direct transcription of the scale-invariant SDR definition.
double SiSdrOracle(const std::vector<double> &e, const std::vector<double> &s) {
  long double es = 0, ss = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    es += static_cast<long double>(e[i]) * s[i];
    ss += static_cast<long double>(s[i]) * s[i];
  }
  const long double a = es / ss;
  long double num = 0, den = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const long double target = a * s[i];
    num += target * target;
    den += (target - e[i]) * (target - e[i]);
  }
  return static_cast<double>(10.0L * std::log10(num / den));
}

std::vector<std::string> RandomTokens(std::mt19937_64 &gen, int max_len) {
  std::uniform_int_distribution<int> len(0, max_len), tok(0, 2);
  std::vector<std::string> out(len(gen));
  for (auto &t : out) t = std::string(1, static_cast<char>('a' + tok(gen)));
  return out;
}

// Pearson correlation of average ranks, written out independently.
double SpearmanOracle(const std::vector<double> &x, const std::vector<double> &y) {
  auto ranks = [](const std::vector<double> &v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (double w : v) {
        less += w < v[i];
        equal += w == v[i];
      }
      r[i] = less + (equal + 1) / 2.0;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i] / n, my += ry[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

void WriteWave(const std::filesystem::path &p, const std::vector<double> &x) {
  WaveData w;
  w.samples = QuantizePcm16(std::span<const double>(x));
  WriteWav(p, w);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("edit alignment equals brute-force distance") {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 400; ++trial) {
    const auto ref = RandomTokens(gen, 5), hyp = RandomTokens(gen, 5);
    const EditCounts e = AlignEdits(ref, hyp);
    CHECK(e.errors() == mbtest::BruteForceEditDistance(ref, hyp));
    CHECK(e.ref_length == ref.size());
    CHECK(e.substitutions + e.deletions <= ref.size());
    CHECK(ref.size() - e.deletions + e.insertions == hyp.size());
  }
}

TEST_CASE("word error rate") {
  const auto ref = TokenizeTranscript("The cat  sat on THE mat");
  CHECK(ref == std::vector<std::string>{"the", "cat", "sat", "on", "the", "mat"});
  const auto hyp = TokenizeTranscript("the cat sit on mat today");
  CHECK(Wer(ref, hyp) == doctest::Approx(3.0 / 6.0));
  CHECK(Wer(ref, ref) == 0.0);
  CHECK_THROWS_AS(Wer({}, hyp), InvalidArgument);
  CHECK(AlignEdits({}, hyp).insertions == hyp.size());
  const std::vector<std::vector<std::string>> refs = {{"a", "b"}, {"c", "d", "e", "f"}};
  const std::vector<std::vector<std::string>> hyps = {{"a"}, {"c", "x", "e", "f", "g"}};
  CHECK(CorpusWer(refs, hyps) == doctest::Approx(3.0 / 6.0));
}

TEST_CASE("accuracy") {
  const std::vector<int> l = {0, 1, 2, 2}, p = {0, 2, 2, 2};
  CHECK(Accuracy(l, p) == doctest::Approx(0.75));
  CHECK_THROWS_AS(Accuracy(l, std::vector<int>{0}), InvalidArgument);
  CHECK_THROWS_AS(Accuracy(std::vector<int>{}, std::vector<int>{}), InvalidArgument);
}

TEST_CASE("scale-invariant SDR matches the definition") {
  const auto s = Gaussian(5000, 1);
  const auto n = Gaussian(5000, 2, 0.3);
  std::vector<double> e(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) e[i] = 0.8 * s[i] + n[i];
  CHECK(SiSdr(e, s) == doctest::Approx(SiSdrOracle(e, s)).epsilon(1e-12));
}

TEST_CASE("scale invariance") {
  const auto s = Gaussian(3000, 3);
  auto e = Gaussian(3000, 4, 0.5);
  for (std::size_t i = 0; i < e.size(); ++i) e[i] += s[i];
  const double base = SiSdr(e, s);
  for (double c : {2.0, 0.5, 1024.0, 1.0 / 64}) {
    CHECK(SiSdr(Scaled(e, c), s) == base);
    CHECK(SiSdr(e, Scaled(s, c)) == base);
  }
  for (double c : {3.0, 0.1, 7.5})
    CHECK(std::abs(SiSdr(Scaled(e, c), s) - base) < 1e-10);
}

TEST_CASE("improvement of the mixture itself is zero and values are capped") {
  const auto s = Gaussian(1000, 5);
  auto mix = Gaussian(1000, 6);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += s[i];
  CHECK(SiSdri(mix, mix, s) == 0.0);
  CHECK(SiSdr(s, s) == kSiSdrCapDb);
  CHECK(SiSdr(Scaled(s, 3.0), s) == kSiSdrCapDb);
  std::vector<double> ortho(1000, 0.0);
  ortho[0] = s[1];
  ortho[1] = -s[0];
  CHECK(SiSdr(ortho, s) == -kSiSdrCapDb);
  CHECK_THROWS_AS(SiSdr(s, std::vector<double>(1000, 0.0)), InvalidArgument);
  CHECK_THROWS_AS(SiSdr(s, std::vector<double>(999, 1.0)), InvalidArgument);
}

TEST_CASE("average ranks") {
  const std::vector<double> v = {10, 20, 20, 30, 5};
  CHECK(AverageRanks(v) == std::vector<double>{2, 3.5, 3.5, 5, 1});
  const RankVector r = RankVector::FromScores({"a", "b", "c"}, {0.9, 0.1, 0.9});
  CHECK(r.RankOf("a") == 1.5);
  CHECK(r.RankOf("b") == 3.0);
  CHECK(r.HasTies());
  CHECK_FALSE(RankVector::FromOrder({"x", "y"}).HasTies());
  CHECK(RankVector::FromScores({"a", "b"}, {1.0, 2.0}, false).RankOf("a") == 1.0);
}

TEST_CASE("spearman without ties") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> names;
    std::vector<double> x, y;
    for (int i = 0; i < 9; ++i) {
      names.push_back("m" + std::to_string(i));
      x.push_back(std::uniform_real_distribution<double>(0, 1)(gen));
      y.push_back(std::uniform_real_distribution<double>(0, 1)(gen));
    }
    const double rho = SpearmanRho(RankVector::FromScores(names, x), RankVector::FromScores(names, y));
    CHECK(rho == doctest::Approx(SpearmanOracle(x, y)).epsilon(1e-12));
  }
  // One adjacent swap among 11: 1 - 6*2/(11*120).
  std::vector<std::string> order, swapped;
  for (int i = 0; i < 11; ++i) order.push_back("m" + std::to_string(i));
  swapped = order;
  std::swap(swapped[3], swapped[4]);
  CHECK(SpearmanRho(RankVector::FromOrder(order), RankVector::FromOrder(swapped)) ==
        doctest::Approx(1.0 - 12.0 / 1320.0).epsilon(1e-15));
}

TEST_CASE("spearman with ties") {
  const std::vector<std::string> names = {"a", "b", "c", "d", "e", "f"};
  const std::vector<double> x = {1, 2, 2, 3, 4, 4}, y = {6, 5, 4, 4, 2, 1};
  const double rho = SpearmanRho(RankVector::FromScores(names, x), RankVector::FromScores(names, y));
  CHECK(rho == doctest::Approx(SpearmanOracle(x, y)).epsilon(1e-12));
  CHECK_THROWS_AS(SpearmanRho(RankVector::FromOrder({"a", "b"}), RankVector::FromOrder({"a", "c"})),
                  InvalidArgument);
}

}  // TEST_SUITE

TEST_SUITE("plugins") {

TEST_CASE("sidecar scores") {
  mbtest::TempDir dir("sidecar");
  {
    std::ofstream f(dir / "s.tsv");
    f << "# id\tscore\nu1\t2.5\r\nu2\t3.5\n\nu3\t-1\n";
  }
  const auto table = LoadSidecar(dir / "s.tsv");
  CHECK(table.size() == 3);
  const MetricPlugin p = MetricPlugin::FromJson("pesq", {{"sidecar", (dir / "s.tsv").string()}});
  CHECK(p.kind == MetricPlugin::Kind::kSidecar);
  const MetricValue v = ExternalMetricMean(p, {{"u1", {}, {}}, {"u2", {}, {}}});
  CHECK(v.value == doctest::Approx(3.0));
  CHECK_THROWS_AS(ExternalMetricMean(p, {{"u9", {}, {}}}), NotFoundError);
  {
    std::ofstream f(dir / "bad.tsv");
    f << "u1\t2.5x\n";
  }
  CHECK_THROWS_AS(LoadSidecar(dir / "bad.tsv"), FormatError);
}

TEST_CASE("command scores") {
  mbtest::TempDir dir("command");
  {
    std::ofstream f(dir / "size.sh");
    f << "#!/bin/sh\nwc -c < \"$2\"\n";
  }
  std::vector<MetricItem> items;
  double expect = 0.0;
  for (int i = 0; i < 6; ++i) {
    const auto est = dir / ("e" + std::to_string(i) + ".txt");
    std::ofstream(est) << std::string(10 + 7 * i, 'x');
    items.push_back({"u" + std::to_string(i), dir / "ref with 'quote'.txt", est});
    expect += 10 + 7 * i;
  }
  const MetricPlugin p =
      MetricPlugin::FromJson("stoi", {{"command", "sh " + (dir / "size.sh").string()}});
  CHECK(ExternalMetricMean(p, items, 1).value == doctest::Approx(expect / 6));
  CHECK(ExternalMetricScores(p, items, 4) == ExternalMetricScores(p, items, 1));

  const MetricPlugin failing = MetricPlugin::FromJson("stoi", {{"command", "false"}});
  try {
    ExternalMetricMean(failing, items, 2);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("'u0'") != std::string::npos);
  }
  CHECK_THROWS_AS(RunMetricCommand("echo 1 2", "a", "b"), Error);
  CHECK_THROWS_AS(RunMetricCommand("echo x", "a", "b"), Error);
}

TEST_CASE("builtin proxies") {
  mbtest::TempDir dir("builtin");
  const auto clean = Scaled(Gaussian(4000, 1), 0.1);
  auto noisy = Scaled(Gaussian(4000, 2), 0.02);
  for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += clean[i];
  WriteWave(dir / "c.wav", clean);
  WriteWave(dir / "n.wav", noisy);
  const MetricItem same{"u", dir / "c.wav", dir / "c.wav"}, item{"u", dir / "c.wav", dir / "n.wav"};
  const auto corr = MetricPlugin::FromJson("stoi", {{"builtin", "correlation"}});
  CHECK(ExternalMetricMean(corr, {same}).value == doctest::Approx(1.0));
  const double c = ExternalMetricMean(corr, {item}).value;
  CHECK(c > 0.9);
  CHECK(c < 1.0);
  const auto seg = MetricPlugin::FromJson("pesq", {{"builtin", "seg_snr"}});
  CHECK(ExternalMetricMean(seg, {same}).value == doctest::Approx(35.0));
  CHECK(ExternalMetricMean(seg, {item}).value < 35.0);
  CHECK_THROWS_AS(MetricPlugin::FromJson("x", {{"builtin", "nope"}}), InvalidArgument);
}

}  // TEST_SUITE
