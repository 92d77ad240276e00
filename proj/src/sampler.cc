// sampler.cc

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

#include "minibench/sampler.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "minibench/common.h"
#include "minibench/rng.h"

namespace minibench {

using nlohmann::json;

namespace {

const char *KindName(SamplingPolicy::Kind k) {
  switch (k) {
    case SamplingPolicy::Kind::kStratifiedFraction: return "stratified_fraction";
    case SamplingPolicy::Kind::kPerSpeakerCount: return "per_speaker";
    case SamplingPolicy::Kind::kGlobalFraction: return "global_fraction";
    case SamplingPolicy::Kind::kFixedCount: return "fixed_count";
    case SamplingPolicy::Kind::kIdentity: return "identity";
  }
  return "?";
}

// First k of a seeded shuffle, returned sorted.
std::vector<std::size_t> TakeShuffled(std::vector<std::size_t> items, std::size_t k,
                                      std::uint64_t seed) {
  Rng rng(seed);
  rng.Shuffle(&items);
  items.resize(std::min(k, items.size()));
  std::sort(items.begin(), items.end());
  return items;
}

}  // namespace

void SamplingPolicy::Validate() const {
  auto fail = [](const std::string &m) { throw InvalidArgument("sampling policy: " + m); };
  switch (kind) {
    case Kind::kStratifiedFraction:
      if (edges.size() < 2) fail("need at least two edges");
      for (std::size_t i = 1; i < edges.size(); ++i)
        if (!(edges[i] > edges[i - 1])) fail("edges must be strictly increasing");
      [[fallthrough]];
    case Kind::kGlobalFraction:
      if (!(fraction > 0.0 && fraction <= 1.0)) fail("fraction must be in (0, 1]");
      break;
    case Kind::kPerSpeakerCount:
    case Kind::kFixedCount:
      if (count < 1) fail("count must be >= 1");
      break;
    case Kind::kIdentity:
      break;
  }
}

json SamplingPolicy::ToJson() const {
  json j;
  j["type"] = KindName(kind);
  if (kind == Kind::kStratifiedFraction) j["edges"] = edges;
  if (kind == Kind::kStratifiedFraction || kind == Kind::kGlobalFraction) j["fraction"] = fraction;
  if (kind == Kind::kPerSpeakerCount || kind == Kind::kFixedCount) j["count"] = count;
  j["seed"] = seed;
  return j;
}

SamplingPolicy SamplingPolicy::FromJson(const json &j) {
  SamplingPolicy p;
  const std::string type = j.value("type", std::string("identity"));
  if (type == "stratified_fraction") {
    p.kind = Kind::kStratifiedFraction;
    const json &e = j.at("edges");
    if (e.is_string()) {
      const std::string name = e.get<std::string>();
      if (name == "pesq") p.edges = kPesqEdges;
      else if (name == "snr") p.edges = kSnrEdges;
      else throw InvalidArgument("unknown edge preset '" + name + "'");
    } else {
      p.edges = e.get<std::vector<double>>();
    }
  } else if (type == "per_speaker") {
    p.kind = Kind::kPerSpeakerCount;
  } else if (type == "global_fraction") {
    p.kind = Kind::kGlobalFraction;
  } else if (type == "fixed_count") {
    p.kind = Kind::kFixedCount;
  } else if (type != "identity") {
    throw InvalidArgument("unknown sampling policy '" + type + "'");
  }
  p.fraction = j.value("fraction", p.fraction);
  p.count = j.value("count", p.count);
  p.seed = j.value("seed", p.seed);
  p.Validate();
  return p;
}

Strata Stratify(const std::vector<Utterance> &utts, const std::vector<double> &edges) {
  if (edges.size() < 2) throw InvalidArgument("stratify needs at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1])) throw InvalidArgument("edges must be strictly increasing");
  Strata s;
  const std::size_t k = edges.size() - 1;
  s.members.resize(k);
  for (std::size_t i = 0; i < utts.size(); ++i) {
    if (!utts[i].score)
      throw InvalidArgument("utterance '" + utts[i].id + "' has no stratification score");
    const double v = *utts[i].score;
    std::size_t idx;
    if (v < edges.front()) {
      idx = 0;
      ++s.clamped_below;
    } else if (v > edges.back()) {
      idx = k - 1;
      ++s.clamped_above;
    } else {
      // First edge strictly greater than v, so v on an interior edge goes right.
      auto it = std::upper_bound(edges.begin(), edges.end(), v);
      idx = std::min(k - 1, static_cast<std::size_t>(it - edges.begin()) - 1);
    }
    s.members[idx].push_back(i);
  }
  return s;
}

std::size_t StratumQuota(std::size_t size, double fraction) {
  if (size == 0 || fraction <= 0.0) return 0;
  const auto q = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(size)));
  return std::clamp<std::size_t>(q, 1, size);
}

std::vector<std::size_t> SampleStratified(const Strata &strata, double fraction,
                                          std::uint64_t seed) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < strata.members.size(); ++i) {
    const auto &m = strata.members[i];
    auto picked = TakeShuffled(m, StratumQuota(m.size(), fraction),
                               Rng::Derive(seed, "stratum", i));
    out.insert(out.end(), picked.begin(), picked.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> SamplePerSpeaker(const std::vector<Utterance> &utts, std::int64_t n,
                                          std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("per-speaker count must be >= 1");
  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    if (!utts[i].speaker)
      throw InvalidArgument("utterance '" + utts[i].id + "' has no speaker id");
    by_speaker[*utts[i].speaker].push_back(i);
  }
  std::vector<std::size_t> out;
  for (auto &[speaker, idx] : by_speaker) {
    auto picked = TakeShuffled(idx, static_cast<std::size_t>(n), Rng::Derive(seed, speaker));
    out.insert(out.end(), picked.begin(), picked.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> SampleGlobalFraction(std::size_t size, double fraction,
                                              std::uint64_t seed) {
  std::vector<std::size_t> all(size);
  std::iota(all.begin(), all.end(), 0);
  return TakeShuffled(std::move(all), StratumQuota(size, fraction),
                      Rng::Derive(seed, "global"));
}

std::vector<std::size_t> SubsampleCount(std::size_t size, std::int64_t n, std::uint64_t seed,
                                        bool *clipped) {
  if (n < 0) throw InvalidArgument("subsample count must be non-negative");
  if (clipped) *clipped = static_cast<std::size_t>(n) > size;
  std::vector<std::size_t> all(size);
  std::iota(all.begin(), all.end(), 0);
  return TakeShuffled(std::move(all), static_cast<std::size_t>(n), Rng::Derive(seed, "count"));
}

SampleResult ApplyPolicy(const Manifest &source, const SamplingPolicy &policy) {
  policy.Validate();
  json prov;
  prov["policy"] = policy.ToJson();
  prov["seed"] = policy.seed;
  prov["rng"] = Rng::kAlgorithm;
  prov["input_count"] = source.size();

  std::vector<std::size_t> picked;
  using Kind = SamplingPolicy::Kind;
  switch (policy.kind) {
    case Kind::kStratifiedFraction: {
      Strata strata = Stratify(source.utterances, policy.edges);
      picked = SampleStratified(strata, policy.fraction, policy.seed);
      json rows = json::array();
      for (std::size_t i = 0; i < strata.members.size(); ++i) {
        const std::size_t avail = strata.members[i].size();
        rows.push_back({{"lo", policy.edges[i]},
                        {"hi", policy.edges[i + 1]},
                        {"available", avail},
                        {"selected", StratumQuota(avail, policy.fraction)}});
      }
      prov["strata"] = rows;
      prov["clamped_below"] = strata.clamped_below;
      prov["clamped_above"] = strata.clamped_above;
      break;
    }
    case Kind::kPerSpeakerCount:
      picked = SamplePerSpeaker(source.utterances, policy.count, policy.seed);
      break;
    case Kind::kGlobalFraction:
      picked = SampleGlobalFraction(source.size(), policy.fraction, policy.seed);
      break;
    case Kind::kFixedCount: {
      bool clipped = false;
      picked = SubsampleCount(source.size(), policy.count, policy.seed, &clipped);
      if (clipped) prov["warning"] = "requested count exceeds manifest size; identity used";
      break;
    }
    case Kind::kIdentity:
      picked.resize(source.size());
      std::iota(picked.begin(), picked.end(), 0);
      break;
  }
  prov["output_count"] = picked.size();

  SampleResult r;
  r.subset.base_dir = source.base_dir;
  r.subset.utterances.reserve(picked.size());
  for (std::size_t i : picked) r.subset.utterances.push_back(source.utterances[i]);
  r.subset.provenance = prov;
  r.provenance = std::move(prov);
  return r;
}

}  // namespace minibench
