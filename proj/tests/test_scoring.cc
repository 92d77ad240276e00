// tests/test_scoring.cc

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

#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "minibench/common.h"
#include "minibench/scoring.h"
#include "oracles.h"

using namespace minibench;

namespace {

const std::vector<TaskKind> kTasks = {TaskKind::kAsr, TaskKind::kSid, TaskKind::kSe, TaskKind::kSs};

std::map<std::string, double> Raw(const mbtest::ResultRow &r) {
  return {{"wer", r.wer}, {"acc", r.acc}, {"pesq", r.pesq}, {"stoi", r.stoi}, {"si_sdri", r.si_sdri}};
}

ScoreMatrix PrintedMatrix(const ScoringOptions &opts) {
  ScoreMatrix m;
  m.tasks = kTasks;
  for (const auto &r : mbtest::PrintedResults()) {
    std::vector<double> s;
    for (TaskKind t : kTasks) s.push_back(ToSingleMetric(t, Raw(r), opts));
    m.Add(r.model, s, Raw(r));
  }
  return m;
}

// Spreadsheet-style evaluation: per-task column best among the non-baseline
// rows, then the mean of the normalized distances times 1000.
std::map<std::string, double> OracleScores(double stoi_divisor) {
  const auto &rows = mbtest::PrintedResults();
  auto cols = [&](const mbtest::ResultRow &r) {
    return std::vector<double>{100.0 - r.wer, r.acc, (r.pesq + r.stoi / stoi_divisor) / 2.0,
                               r.si_sdri};
  };
  const auto base = cols(rows.back());
  std::vector<double> best(4, -1e300);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i)
    for (int t = 0; t < 4; ++t) best[t] = std::max(best[t], cols(rows[i])[t]);
  std::map<std::string, double> out;
  for (const auto &r : rows) {
    const auto c = cols(r);
    double s = 0;
    for (int t = 0; t < 4; ++t) s += (c[t] - base[t]) / (best[t] - base[t]);
    out[r.model] = 250.0 * s;
  }
  return out;
}

std::vector<std::string> ChallengeOrder() {
  std::vector<std::pair<int, std::string>> v;
  for (const auto &r : mbtest::PrintedResults()) v.emplace_back(r.printed_rank + r.rank_arrow, r.model);
  std::sort(v.begin(), v.end());
  std::vector<std::string> order;
  for (const auto &p : v) order.push_back(p.second);
  return order;
}

}  // namespace

TEST_SUITE("scoring") {

TEST_CASE("single metric per task") {
  const std::map<std::string, double> raw = {{"wer", 6.94}, {"acc", 84.74}, {"pesq", 3.02},
                                             {"stoi", 95.22}, {"si_sdri", 10.21}};
  CHECK(ToSingleMetric(TaskKind::kAsr, raw) == doctest::Approx(93.06));
  CHECK(ToSingleMetric(TaskKind::kSid, raw) == 84.74);
  CHECK(ToSingleMetric(TaskKind::kSe, raw) == doctest::Approx((3.02 + 0.9522) / 2));
  ScoringOptions pct;
  pct.stoi_scale = StoiScale::kPercent;
  CHECK(ToSingleMetric(TaskKind::kSe, raw, pct) == doctest::Approx(49.12));
  CHECK(ToSingleMetric(TaskKind::kSs, raw) == 10.21);
  CHECK_THROWS_AS(ToSingleMetric(TaskKind::kSe, {{"pesq", 3.0}}), InvalidArgument);
  CHECK(ScoringOptions::FromJson(pct.ToJson()).stoi_scale == StoiScale::kPercent);
  CHECK_THROWS_AS(ScoringOptions::FromJson({{"stoi_scale", "ratio"}}), InvalidArgument);
}

TEST_CASE("normalized score by hand") {
  CHECK(NormalizedScore({5, 10}, {0, 0}, {10, 10}) == doctest::Approx(750.0));
  CHECK(NormalizedScore({10, 20}, {0, 10}, {10, 20}) == doctest::Approx(1000.0));
  CHECK_THROWS_AS(NormalizedScore({1}, {1}, {1}), InvalidArgument);
  CHECK_THROWS_AS(NormalizedScore({1, 2}, {1}, {1}), InvalidArgument);
}

TEST_CASE("published results reproduce the printed ranks") {
  const Leaderboard lb = BuildLeaderboard(PrintedMatrix({}), "FBANK", ChallengeOrder());
  const auto oracle = OracleScores(100.0);
  REQUIRE(lb.entries.size() == 11);
  for (const auto &r : mbtest::PrintedResults()) {
    CAPTURE(r.model);
    const auto it = std::find_if(lb.entries.begin(), lb.entries.end(),
                                 [&](const LeaderboardEntry &e) { return e.model == r.model; });
    REQUIRE(it != lb.entries.end());
    CHECK(it->rank == r.printed_rank);
    CHECK(it->score == doctest::Approx(oracle.at(r.model)).epsilon(1e-12));
    REQUIRE(it->rank_delta);
    CHECK(*it->rank_delta == r.rank_arrow);
  }
  CHECK(oracle.at("wav2vec 2.0 Large") == doctest::Approx(747.0).epsilon(5e-5));
  CHECK(oracle.at("HuBERT Large") == doctest::Approx(744.8).epsilon(5e-5));
  CHECK(lb.sota[0] == "HuBERT Large");
  CHECK(lb.entries.front().model == "WavLM Large");
  CHECK(lb.entries.back().score == 0.0);
  CHECK(lb.warnings.empty());
  REQUIRE(lb.spearman);
  CHECK(*lb.spearman == doctest::Approx(1.0 - 24.0 / 1320.0).epsilon(1e-12));
  CHECK(std::abs(*lb.spearman - mbtest::kPrintedSpearman) < 0.001);
  CHECK(lb.ToText().find("(↑ 1) 4") != std::string::npos);
}

TEST_CASE("percent scale gives the reported-value averages") {
  ScoringOptions pct;
  pct.stoi_scale = StoiScale::kPercent;
  const Leaderboard lb = BuildLeaderboard(PrintedMatrix(pct), "FBANK");
  const auto oracle = OracleScores(1.0);
  for (const auto &e : lb.entries) CHECK(e.score == doctest::Approx(oracle.at(e.model)).epsilon(1e-12));
  CHECK(oracle.at("wav2vec 2.0 Large") == doctest::Approx(740.0).epsilon(5e-5));
  CHECK(oracle.at("HuBERT Large") == doctest::Approx(739.0).epsilon(5e-5));
  CHECK_FALSE(lb.spearman);
}

TEST_CASE("scores are invariant to positive affine maps of a task") {
  const ScoreMatrix m = PrintedMatrix({});
  ScoreMatrix scaled;
  scaled.tasks = m.tasks;
  for (std::size_t i = 0; i < m.models.size(); ++i) {
    auto v = m.values[i];
    v[1] = 3.5 * v[1] - 40.0;
    v[3] = 0.25 * v[3] + 9.0;
    scaled.Add(m.models[i], v);
  }
  const Leaderboard a = BuildLeaderboard(m, "FBANK"), b = BuildLeaderboard(scaled, "FBANK");
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].model == b.entries[i].model);
    CHECK(a.entries[i].score == doctest::Approx(b.entries[i].score).epsilon(1e-12));
  }
}

TEST_CASE("degenerate task is dropped") {
  ScoreMatrix m;
  m.tasks = {TaskKind::kAsr, TaskKind::kSid};
  m.Add("base", {10, 50});
  m.Add("a", {20, 50});
  m.Add("b", {15, 40});
  const Leaderboard lb = BuildLeaderboard(m, "base");
  REQUIRE(lb.warnings.size() == 1);
  CHECK(lb.warnings[0].find("SID dropped") != std::string::npos);
  CHECK(lb.entries[0].model == "a");
  CHECK(lb.entries[0].score == doctest::Approx(1000.0));
  CHECK(lb.entries[1].model == "b");
  CHECK(lb.entries[1].score == doctest::Approx(500.0));

  ScoreMatrix flat;
  flat.tasks = {TaskKind::kAsr};
  flat.Add("base", {1});
  flat.Add("a", {1});
  CHECK_THROWS_AS(BuildLeaderboard(flat, "base"), InvalidArgument);
}

TEST_CASE("baseline above the best model is flagged") {
  ScoreMatrix m;
  m.tasks = {TaskKind::kAsr, TaskKind::kSs};
  m.Add("base", {10, 5});
  m.Add("a", {20, 4});
  const Leaderboard lb = BuildLeaderboard(m, "base");
  REQUIRE(lb.warnings.size() == 1);
  CHECK(lb.warnings[0].find("change sign") != std::string::npos);
}

TEST_CASE("ties share the average rank") {
  ScoreMatrix m;
  m.tasks = {TaskKind::kAsr};
  m.Add("base", {0});
  m.Add("b", {10});
  m.Add("a", {10});
  m.Add("c", {5});
  const Leaderboard lb = BuildLeaderboard(m, "base");
  CHECK(lb.entries[0].model == "a");
  CHECK(lb.entries[0].rank == 1.5);
  CHECK(lb.entries[1].rank == 1.5);
  CHECK(lb.entries[2].rank == 3.0);
}

TEST_CASE("matrix validation") {
  ScoreMatrix m;
  m.tasks = {TaskKind::kAsr};
  m.Add("a", {1});
  CHECK_THROWS_AS(m.Add("a", {2}), InvalidArgument);
  CHECK_THROWS_AS(m.Add("b", {1, 2}), InvalidArgument);
  CHECK_THROWS_AS(m.Add("c", {std::nan("")}), InvalidArgument);
  CHECK_THROWS_AS(BuildLeaderboard(m, "FBANK"), InvalidArgument);
  CHECK_THROWS_AS(BuildLeaderboard(m, "a"), InvalidArgument);
  CHECK(RankDeltaLabel(0) == "");
  CHECK(RankDeltaLabel(-2) == "(↓ 2)");
}

}  // TEST_SUITE
