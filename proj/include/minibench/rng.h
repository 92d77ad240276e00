// minibench/rng.h

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

#ifndef MINIBENCH_RNG_H_
#define MINIBENCH_RNG_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "minibench/common.h"

namespace minibench {

/// Reproducible random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard.  The distributions below are written out explicitly because the
/// standard library's distributions are implementation-defined, so subsets
/// and synthetic corpora are identical across toolchains.
class Rng {
 public:
  static constexpr const char *kAlgorithm =
      "mt19937_64/u53-uniform/rejection-int/fisher-yates-v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Seed derived from a base seed and a label, e.g. ("utt", index).
  static std::uint64_t Derive(std::uint64_t seed, std::string_view label,
                              std::uint64_t index = 0) {
    std::uint64_t h = Fnv1a64(label, seed ^ 0x9e3779b97f4a7c15ULL);
    return Fnv1a64(std::string_view(reinterpret_cast<const char *>(&index),
                                    sizeof(index)),
                   h);
  }

  std::uint64_t Next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform in [0, n) without modulo bias.
  std::uint64_t UniformInt(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = Next();
    } while (x >= limit);
    return x % n;
  }

  // Inclusive integer range.
  std::int64_t UniformInt(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    UniformInt(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Box-Muller; one value per call.
  double Normal() {
    double u1 = Uniform();
    while (u1 <= 0.0) u1 = Uniform();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Fisher-Yates, iterating from the back.
  template <typename T>
  void Shuffle(std::vector<T> *v) {
    for (std::size_t i = v->size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(UniformInt(i));
      std::swap((*v)[i - 1], (*v)[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace minibench

#endif  // MINIBENCH_RNG_H_
