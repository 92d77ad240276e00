// minibench/sampler.h

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

#ifndef MINIBENCH_SAMPLER_H_
#define MINIBENCH_SAMPLER_H_

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "minibench/corpus.h"

namespace minibench {

// Dataset reduction.  Every function returns indices into its input, sorted
// ascending, so a subset keeps the manifest's order.  All randomness comes
// from Rng (see rng.h), so results are reproducible across platforms.

struct SamplingPolicy {
  enum class Kind {
    kStratifiedFraction,  // edges + fraction
    kPerSpeakerCount,     // count
    kGlobalFraction,      // fraction
    kFixedCount,          // count
    kIdentity,
  };
  Kind kind = Kind::kIdentity;
  std::vector<double> edges;
  double fraction = 1.0;
  std::int64_t count = 0;
  std::uint64_t seed = 0;

  // edges strictly increasing with >= 2 entries; 0 < fraction <= 1; count >= 1.
  void Validate() const;
  nlohmann::json ToJson() const;
  // {"type": "stratified_fraction"|"per_speaker"|"global_fraction"|
  //  "fixed_count"|"identity", "edges": [...], "fraction": f, "count": n,
  //  "seed": s}
  static SamplingPolicy FromJson(const nlohmann::json &j);
};

// Interval edges used by the original benchmark's enhancement and separation
// training subsets.  The first enhancement edge is printed as "~-0.5".
inline const std::vector<double> kPesqEdges = {-0.5, 2.6, 3.1, 3.6, 4.0, 4.5};
inline const std::vector<double> kSnrEdges = {0, 5, 10, 15, 20, 25};

struct Strata {
  // strata[i] holds indices with edges[i] <= score < edges[i+1]; the last
  // interval is closed on the right.
  std::vector<std::vector<std::size_t>> members;
  std::size_t clamped_below = 0;  // scores < edges.front(), put in stratum 0
  std::size_t clamped_above = 0;  // scores > edges.back(), put in the last
};

// Throws InvalidArgument if an utterance has no score.
Strata Stratify(const std::vector<Utterance> &utts, const std::vector<double> &edges);

// round(fraction * size) with halves away from zero, at least 1 for a
// non-empty stratum.
std::size_t StratumQuota(std::size_t size, double fraction);

std::vector<std::size_t> SampleStratified(const Strata &strata, double fraction,
                                          std::uint64_t seed);

// Up to n utterances per speaker; speakers with fewer contribute all.
// Throws InvalidArgument if an utterance has no speaker.
std::vector<std::size_t> SamplePerSpeaker(const std::vector<Utterance> &utts,
                                          std::int64_t n, std::uint64_t seed);

std::vector<std::size_t> SampleGlobalFraction(std::size_t size, double fraction,
                                              std::uint64_t seed);

// Exactly min(n, size) indices.  `clipped` is set when n > size.
std::vector<std::size_t> SubsampleCount(std::size_t size, std::int64_t n, std::uint64_t seed,
                                        bool *clipped = nullptr);

/// Subset manifest plus the record of how it was drawn.
struct SampleResult {
  Manifest subset;
  nlohmann::json provenance;
};

// Always draws from `source` itself; the subset's provenance is embedded as
// the manifest's leading record.
SampleResult ApplyPolicy(const Manifest &source, const SamplingPolicy &policy);

}  // namespace minibench

#endif  // MINIBENCH_SAMPLER_H_
