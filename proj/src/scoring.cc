// scoring.cc

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

#include "minibench/scoring.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "minibench/common.h"

namespace minibench {

using nlohmann::json;

namespace {

double Need(const std::map<std::string, double> &raw, const std::string &key, TaskKind task) {
  auto it = raw.find(key);
  if (it == raw.end())
    throw InvalidArgument("task " + std::string(TaskKindName(task)) + " is missing metric '" +
                          key + "'");
  return it->second;
}

std::string Fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string RankText(double rank) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", rank);
  return buf;
}

// Display width counting each UTF-8 code point once.
std::size_t Width(const std::string &s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

}  // namespace

json ScoringOptions::ToJson() const {
  return {{"stoi_scale", stoi_scale == StoiScale::kFraction ? "fraction" : "percent"},
          {"baseline", baseline}};
}

ScoringOptions ScoringOptions::FromJson(const json &j) {
  ScoringOptions o;
  const std::string scale = j.value("stoi_scale", std::string("fraction"));
  if (scale == "percent") o.stoi_scale = StoiScale::kPercent;
  else if (scale != "fraction") throw InvalidArgument("stoi_scale must be fraction or percent");
  o.baseline = j.value("baseline", o.baseline);
  return o;
}

double ToSingleMetric(TaskKind task, const std::map<std::string, double> &raw,
                      const ScoringOptions &opts) {
  switch (task) {
    case TaskKind::kAsr: return 100.0 - Need(raw, "wer", task);
    case TaskKind::kSid: return Need(raw, "acc", task);
    case TaskKind::kSe: {
      const double pesq = Need(raw, "pesq", task);
      double stoi = Need(raw, "stoi", task);
      if (opts.stoi_scale == StoiScale::kFraction) stoi /= 100.0;
      return (pesq + stoi) / 2.0;
    }
    case TaskKind::kSs: return Need(raw, "si_sdri", task);
  }
  throw InvalidArgument("unknown task");
}

double NormalizedScore(const std::vector<double> &scores, const std::vector<double> &baseline,
                       const std::vector<double> &sota) {
  if (scores.empty() || scores.size() != baseline.size() || scores.size() != sota.size())
    throw InvalidArgument("score: task count mismatch");
  double sum = 0.0;
  for (std::size_t t = 0; t < scores.size(); ++t) {
    const double denom = sota[t] - baseline[t];
    if (denom == 0.0)
      throw InvalidArgument("score: baseline equals SOTA in task " + std::to_string(t));
    sum += (scores[t] - baseline[t]) / denom;
  }
  return 1000.0 / static_cast<double>(scores.size()) * sum;
}

void ScoreMatrix::Add(const std::string &model, const std::vector<double> &task_scores,
                      std::map<std::string, double> raw_metrics) {
  if (task_scores.size() != tasks.size())
    throw InvalidArgument("score matrix: model '" + model + "' has " +
                          std::to_string(task_scores.size()) + " task scores, expected " +
                          std::to_string(tasks.size()));
  if (std::find(models.begin(), models.end(), model) != models.end())
    throw InvalidArgument("score matrix: duplicate model '" + model + "'");
  for (double v : task_scores)
    if (!std::isfinite(v)) throw InvalidArgument("score matrix: non-finite score for '" + model + "'");
  models.push_back(model);
  values.push_back(task_scores);
  raw.push_back(std::move(raw_metrics));
}

Leaderboard BuildLeaderboard(const ScoreMatrix &m, const std::string &baseline,
                             const std::optional<std::vector<std::string>> &reference_order) {
  if (m.values.size() != m.models.size()) throw InvalidArgument("score matrix is incomplete");
  const auto base_it = std::find(m.models.begin(), m.models.end(), baseline);
  if (base_it == m.models.end())
    throw InvalidArgument("baseline model '" + baseline + "' is not in the score matrix");
  const std::size_t base = static_cast<std::size_t>(base_it - m.models.begin());
  if (m.models.size() < 2) throw InvalidArgument("leaderboard needs a model besides the baseline");

  Leaderboard lb;
  lb.tasks = m.tasks;
  lb.baseline = baseline;
  std::vector<std::size_t> kept;
  std::vector<double> base_scores, sota_scores;
  for (std::size_t t = 0; t < m.tasks.size(); ++t) {
    std::size_t best = m.models.size();
    for (std::size_t i = 0; i < m.models.size(); ++i) {
      if (i == base) continue;
      if (best == m.models.size() || m.values[i][t] > m.values[best][t]) best = i;
    }
    lb.sota.push_back(m.models[best]);
    if (m.values[best][t] == m.values[base][t]) {
      lb.warnings.push_back("task " + std::string(TaskKindName(m.tasks[t])) +
                            " dropped: baseline equals SOTA");
      continue;
    }
    if (m.values[best][t] < m.values[base][t])
      lb.warnings.push_back("task " + std::string(TaskKindName(m.tasks[t])) +
                            ": baseline outperforms SOTA, normalized terms change sign");
    kept.push_back(t);
    base_scores.push_back(m.values[base][t]);
    sota_scores.push_back(m.values[best][t]);
  }
  if (kept.empty()) throw InvalidArgument("no task separates the baseline from SOTA");

  for (std::size_t i = 0; i < m.models.size(); ++i) {
    LeaderboardEntry e;
    e.model = m.models[i];
    e.task_scores = m.values[i];
    if (i < m.raw.size()) e.raw = m.raw[i];
    std::vector<double> s;
    for (std::size_t t : kept) s.push_back(m.values[i][t]);
    e.score = i == base ? 0.0 : NormalizedScore(s, base_scores, sota_scores);
    lb.entries.push_back(std::move(e));
  }
  std::stable_sort(lb.entries.begin(), lb.entries.end(),
                   [](const LeaderboardEntry &a, const LeaderboardEntry &b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.model < b.model;
                   });
  std::vector<double> neg;
  for (const auto &e : lb.entries) neg.push_back(-e.score);
  const auto ranks = AverageRanks(neg);
  for (std::size_t i = 0; i < lb.entries.size(); ++i) lb.entries[i].rank = ranks[i];

  if (reference_order) {
    const RankVector ref = RankVector::FromOrder(*reference_order);
    const RankVector ours = lb.Ranking();
    lb.spearman = SpearmanRho(ours, ref);
    for (auto &e : lb.entries) e.rank_delta = ref.RankOf(e.model) - e.rank;
  }
  return lb;
}

RankVector Leaderboard::Ranking() const {
  RankVector r;
  for (const auto &e : entries) {
    r.models.push_back(e.model);
    r.ranks.push_back(e.rank);
  }
  return r;
}

std::string RankDeltaLabel(double delta) {
  if (delta == 0.0) return "";
  return std::string(delta > 0 ? "(↑ " : "(↓ ") + RankText(std::abs(delta)) + ")";
}

std::string Leaderboard::ToTsv() const {
  std::string out = "rank\tmodel";
  for (TaskKind t : tasks) out += "\t" + std::string(TaskKindName(t));
  out += "\tscore\trank_delta\n";
  for (const auto &e : entries) {
    out += RankText(e.rank) + "\t" + e.model;
    for (double v : e.task_scores) out += "\t" + Fixed(v, 4);
    out += "\t" + Fixed(e.score, 4) + "\t" +
           (e.rank_delta ? RankText(*e.rank_delta) : std::string("NA")) + "\n";
  }
  return out;
}

std::string Leaderboard::ToText() const {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {"Model"};
  for (TaskKind t : tasks) header.emplace_back(TaskKindName(t));
  header.insert(header.end(), {"Score", "Rank"});
  cells.push_back(header);
  for (const auto &e : entries) {
    std::vector<std::string> line = {e.model};
    for (double v : e.task_scores) line.push_back(Fixed(v, 2));
    line.push_back(Fixed(e.score, 1));
    std::string rank = RankText(e.rank);
    if (e.rank_delta && *e.rank_delta != 0.0) rank = RankDeltaLabel(*e.rank_delta) + " " + rank;
    line.push_back(rank);
    cells.push_back(line);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto &line : cells)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], Width(line[i]));
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      const std::string &cell = cells[r][i];
      const std::string pad(width[i] - Width(cell), ' ');
      out += (i ? "  " : "") + (i == 0 ? cell + pad : pad + cell);
    }
    out += "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      out += std::string(total - 2, '-') + "\n";
    }
  }
  if (spearman) out += "Spearman rho vs reference: " + Fixed(*spearman, 5) + "\n";
  for (const auto &w : warnings) out += "warning: " + w + "\n";
  return out;
}

}  // namespace minibench
