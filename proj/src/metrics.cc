// metrics.cc

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

#include "minibench/metrics.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <thread>

#include "minibench/common.h"
#include "minibench/corpus.h"
#include "minibench/wav.h"

namespace minibench {

using nlohmann::json;

json MetricValue::ToJson() const {
  return {{"metric", metric_id}, {"value", value}, {"higher_is_better", higher_is_better},
          {"units", units}};
}

std::vector<std::string> TokenizeTranscript(std::string_view text) {
  return SplitWhitespace(ToLower(text));
}

EditCounts AlignEdits(std::span<const std::string> ref, std::span<const std::string> hyp) {
  struct Cell {
    std::size_t cost = 0, sub = 0, del = 0, ins = 0;
  };
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = {j, 0, 0, j};
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {i, 0, i, 0};
    for (std::size_t j = 1; j <= m; ++j) {
      Cell diag = prev[j - 1];
      if (ref[i - 1] != hyp[j - 1]) {
        ++diag.cost;
        ++diag.sub;
      }
      Cell up = prev[j];
      ++up.cost;
      ++up.del;
      Cell left = cur[j - 1];
      ++left.cost;
      ++left.ins;
      // Prefer the diagonal, then deletions, on equal cost.
      Cell best = diag;
      if (up.cost < best.cost) best = up;
      if (left.cost < best.cost) best = left;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  const Cell &c = prev[m];
  return {c.sub, c.del, c.ins, n};
}

double Wer(std::span<const std::string> ref, std::span<const std::string> hyp) {
  if (ref.empty()) throw InvalidArgument("wer: empty reference");
  return static_cast<double>(AlignEdits(ref, hyp).errors()) / static_cast<double>(ref.size());
}

double CorpusWer(const std::vector<std::vector<std::string>> &refs,
                 const std::vector<std::vector<std::string>> &hyps) {
  if (refs.size() != hyps.size()) throw InvalidArgument("corpus wer: length mismatch");
  std::size_t errors = 0, words = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    errors += AlignEdits(refs[i], hyps[i]).errors();
    words += refs[i].size();
  }
  if (words == 0) throw InvalidArgument("corpus wer: no reference words");
  return static_cast<double>(errors) / static_cast<double>(words);
}

double Accuracy(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size())
    throw InvalidArgument("accuracy: " + std::to_string(labels.size()) + " labels vs " +
                          std::to_string(predictions.size()) + " predictions");
  if (labels.empty()) throw InvalidArgument("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += labels[i] == predictions[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double SiSdr(std::span<const double> estimate, std::span<const double> reference, double cap_db) {
  if (estimate.size() != reference.size()) throw InvalidArgument("si-sdr: length mismatch");
  double ref_energy = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ref_energy += reference[i] * reference[i];
    dot += estimate[i] * reference[i];
  }
  if (ref_energy == 0.0) throw InvalidArgument("si-sdr: all-zero reference");
  const double alpha = dot / ref_energy;
  double target = 0.0, noise = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = alpha * reference[i];
    const double e = t - estimate[i];
    target += t * t;
    noise += e * e;
  }
  // Rounding-level error counts as a perfect estimate.
  if (noise <= target * 1e-20) return cap_db;
  if (target == 0.0) return -cap_db;
  return std::clamp(10.0 * std::log10(target / noise), -cap_db, cap_db);
}

double SiSdri(std::span<const double> estimate, std::span<const double> mixture,
              std::span<const double> reference, double cap_db) {
  return SiSdr(estimate, reference, cap_db) - SiSdr(mixture, reference, cap_db);
}

RankVector RankVector::FromOrder(const std::vector<std::string> &order) {
  RankVector r;
  r.models = order;
  for (std::size_t i = 0; i < order.size(); ++i) r.ranks.push_back(static_cast<double>(i + 1));
  return r;
}

RankVector RankVector::FromScores(const std::vector<std::string> &models,
                                  const std::vector<double> &scores, bool higher_is_better) {
  if (models.size() != scores.size()) throw InvalidArgument("rank vector: length mismatch");
  std::vector<double> keyed(scores);
  if (higher_is_better)
    for (double &v : keyed) v = -v;
  RankVector r;
  r.models = models;
  r.ranks = AverageRanks(keyed);
  return r;
}

double RankVector::RankOf(const std::string &model) const {
  for (std::size_t i = 0; i < models.size(); ++i)
    if (models[i] == model) return ranks[i];
  throw InvalidArgument("rank vector: unknown model '" + model + "'");
}

bool RankVector::HasTies() const {
  std::vector<double> sorted(ranks);
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != static_cast<double>(i + 1)) return true;
  return false;
}

std::vector<double> AverageRanks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double PearsonCorrelation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("pearson: need equal lengths >= 2");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw InvalidArgument("pearson: constant input");
  return sxy / std::sqrt(sxx * syy);
}

double SpearmanRho(const RankVector &a, const RankVector &b) {
  if (a.models.size() != b.models.size())
    throw InvalidArgument("spearman: model sets differ in size");
  std::vector<std::string> sa(a.models), sb(b.models);
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa != sb) throw InvalidArgument("spearman: model sets differ");
  if (std::adjacent_find(sa.begin(), sa.end()) != sa.end())
    throw InvalidArgument("spearman: duplicate model id");

  std::vector<double> ra, rb;
  for (std::size_t i = 0; i < a.models.size(); ++i) {
    ra.push_back(a.ranks[i]);
    rb.push_back(b.RankOf(a.models[i]));
  }
  if (a.HasTies() || b.HasTies()) return PearsonCorrelation(ra, rb);
  const double n = static_cast<double>(ra.size());
  if (ra.size() < 2) throw InvalidArgument("spearman: need at least two models");
  double d2 = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

// --- External metrics ----------------------------------------------------

MetricPlugin MetricPlugin::FromJson(const std::string &metric_id, const json &j) {
  MetricPlugin p;
  p.metric_id = metric_id;
  if (j.contains("command")) {
    p.kind = Kind::kCommand;
    p.command = j.at("command").get<std::string>();
  } else if (j.contains("sidecar")) {
    p.kind = Kind::kSidecar;
    p.sidecar = j.at("sidecar").get<std::string>();
  } else {
    p.kind = Kind::kBuiltin;
    p.builtin = j.value("builtin", p.builtin);
    if (p.builtin != "seg_snr" && p.builtin != "correlation")
      throw InvalidArgument("unknown builtin metric '" + p.builtin + "'");
  }
  p.higher_is_better = j.value("higher_is_better", true);
  return p;
}

json MetricPlugin::ToJson() const {
  switch (kind) {
    case Kind::kCommand: return {{"command", command}};
    case Kind::kSidecar: return {{"sidecar", sidecar.string()}};
    case Kind::kBuiltin: return {{"builtin", builtin}};
  }
  return {};
}

std::map<std::string, double> LoadSidecar(const std::filesystem::path &path) {
  std::istringstream in(ReadFileBytes(path));
  std::map<std::string, double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected id<TAB>score");
    try {
      std::size_t used = 0;
      const std::string num = line.substr(tab + 1);
      const double v = std::stod(num, &used);
      if (used != num.size()) throw std::invalid_argument("trailing text");
      out[line.substr(0, tab)] = v;
    } catch (const std::exception &) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad score");
    }
  }
  return out;
}

namespace {

std::string ShellQuote(const std::string &s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

double Builtin(const std::string &name, const MetricItem &item) {
  const auto ref = ReadWav(item.reference).Normalized();
  const auto est = ReadWav(item.estimate).Normalized();
  if (ref.size() != est.size())
    throw Error("metric '" + name + "': length mismatch for '" + item.utt_id + "'");
  if (name == "seg_snr") return SegmentalSnr(ref, est);
  return WaveCorrelationScore(std::vector<double>(est.begin(), est.end()),
                              std::vector<double>(ref.begin(), ref.end()));
}

}  // namespace

double RunMetricCommand(const std::string &command, const std::filesystem::path &reference,
                        const std::filesystem::path &estimate) {
  const std::string cmd =
      command + " " + ShellQuote(reference.string()) + " " + ShellQuote(estimate.string());
  FILE *pipe = popen(cmd.c_str(), "r");
  if (!pipe) throw Error("metric command could not start: " + command);
  std::string output;
  char buf[256];
  while (std::fgets(buf, sizeof(buf), pipe)) output += buf;
  const int status = pclose(pipe);
  if (status != 0) throw Error("metric command failed (status " + std::to_string(status) + ")");
  const auto tokens = SplitWhitespace(output);
  if (tokens.size() != 1) throw Error("metric command must print exactly one number");
  try {
    std::size_t used = 0;
    const double v = std::stod(tokens[0], &used);
    if (used != tokens[0].size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception &) {
    throw Error("metric command printed a non-number: " + tokens[0]);
  }
}

double WaveCorrelationScore(std::span<const double> estimate, std::span<const double> reference) {
  try {
    return (1.0 + PearsonCorrelation(estimate, reference)) / 2.0;
  } catch (const InvalidArgument &) {
    return 0.5;
  }
}

std::vector<double> ExternalMetricScores(const MetricPlugin &plugin,
                                         const std::vector<MetricItem> &items, int jobs) {
  std::vector<double> scores(items.size(), 0.0);
  if (plugin.kind == MetricPlugin::Kind::kSidecar) {
    const auto table = LoadSidecar(plugin.sidecar);
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto it = table.find(items[i].utt_id);
      if (it == table.end())
        throw NotFoundError("metric '" + plugin.metric_id + "': sidecar has no row for '" +
                            items[i].utt_id + "'");
      scores[i] = it->second;
    }
    return scores;
  }

  std::vector<std::string> errors(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      try {
        scores[i] = plugin.kind == MetricPlugin::Kind::kCommand
                        ? RunMetricCommand(plugin.command, items[i].reference, items[i].estimate)
                        : Builtin(plugin.builtin, items[i]);
      } catch (const std::exception &e) {
        errors[i] = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(items.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  for (std::size_t i = 0; i < items.size(); ++i)
    if (!errors[i].empty())
      throw Error("metric '" + plugin.metric_id + "' failed on '" + items[i].utt_id +
                  "': " + errors[i]);
  return scores;
}

MetricValue ExternalMetricMean(const MetricPlugin &plugin, const std::vector<MetricItem> &items,
                               int jobs) {
  if (items.empty()) throw InvalidArgument("metric '" + plugin.metric_id + "': no items");
  const auto scores = ExternalMetricScores(plugin, items, jobs);
  MetricValue v;
  v.metric_id = plugin.metric_id;
  v.value = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  v.higher_is_better = plugin.higher_is_better;
  return v;
}

}  // namespace minibench
