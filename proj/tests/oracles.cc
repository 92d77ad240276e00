// tests/oracles.cc

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

#include "oracles.h"

#include <atomic>
#include <cmath>
#include <limits>
#include <random>

#include <unistd.h>

namespace mbtest {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string &tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("minibench_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Mat<double> RandomLogProbs(int frames, int vocab, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Mat<double> m(frames, vocab);
  for (int t = 0; t < frames; ++t) {
    double z = 0.0;
    for (int v = 0; v < vocab; ++v) {
      m(t, v) = u(gen);
      z += std::exp(m(t, v));
    }
    for (int v = 0; v < vocab; ++v) m(t, v) -= std::log(z);
  }
  return m;
}

CtcOracle BruteForceCtc(const Mat<double> &lp, const std::vector<int> &label, int blank) {
  const int T = static_cast<int>(lp.rows()), V = static_cast<int>(lp.cols());
  std::vector<int> path(T, 0);
  double total = 0.0;
  Mat<double> occupancy = Mat<double>::Zero(T, V);
  long long count = 1;
  for (int t = 0; t < T; ++t) count *= V;
  for (long long code = 0; code < count; ++code) {
    long long c = code;
    for (int t = 0; t < T; ++t) {
      path[t] = static_cast<int>(c % V);
      c /= V;
    }
    std::vector<int> out;
    int prev = -1;
    for (int s : path) {
      if (s != prev && s != blank) out.push_back(s);
      prev = s;
    }
    if (out != label) continue;
    double logp = 0.0;
    for (int t = 0; t < T; ++t) logp += lp(t, path[t]);
    const double p = std::exp(logp);
    total += p;
    for (int t = 0; t < T; ++t) occupancy(t, path[t]) += p;
  }
  CtcOracle r;
  if (total == 0.0) {
    r.loss = std::numeric_limits<double>::infinity();
    r.grad = Mat<double>::Zero(T, V);
    return r;
  }
  r.loss = -std::log(total);
  r.grad = -occupancy / total;
  return r;
}

std::size_t BruteForceEditDistance(const std::vector<std::string> &ref,
                                   const std::vector<std::string> &hyp) {
  if (ref.empty()) return hyp.size();
  if (hyp.empty()) return ref.size();
  const std::vector<std::string> r(ref.begin() + 1, ref.end());
  const std::vector<std::string> h(hyp.begin() + 1, hyp.end());
  const std::size_t sub = BruteForceEditDistance(r, h) + (ref[0] == hyp[0] ? 0 : 1);
  const std::size_t del = BruteForceEditDistance(r, hyp) + 1;
  const std::size_t ins = BruteForceEditDistance(ref, h) + 1;
  return std::min({sub, del, ins});
}

std::vector<std::complex<double>> NaiveDft(const std::vector<double> &x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ang = -2.0 * M_PI * static_cast<double>(k * i % n) / static_cast<double>(n);
      acc += x[i] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

minibench::FeatureRecord RandomRecord(const std::string &id, int layers, int frames, int dim,
                                      std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> n(0.0f, 1.0f);
  minibench::FeatureRecord r(id, layers, frames, dim);
  for (auto &v : r.data) v = n(gen);
  return r;
}

fs::path DeskConfigPath() { return fs::path(MINIBENCH_SOURCE_DIR) / "configs" / "desk.json"; }
fs::path TestDataDir() { return fs::path(MINIBENCH_SOURCE_DIR) / "tests" / "data"; }

const std::vector<ResultRow> &PrintedResults() {
  static const std::vector<ResultRow> rows = {
      {"WavLM Large", 6.94, 84.74, 3.02, 95.22, 10.21, 1, 0},
      {"WavLM Base+", 9.64, 61.48, 2.92, 94.82, 9.57, 2, 0},
      {"WavLM Base", 10.39, 58.45, 2.90, 94.60, 8.93, 3, 0},
      {"wav2vec 2.0 Large", 7.21, 66.13, 2.93, 94.80, 7.59, 4, +1},
      {"HuBERT Large", 6.87, 68.97, 2.92, 94.77, 7.44, 5, -1},
      {"HuBERT Base", 11.04, 53.16, 2.89, 94.68, 6.37, 6, 0},
      {"wav2vec 2.0 Base", 10.93, 53.93, 2.86, 94.44, 6.65, 7, 0},
      {"DeCoAR 2.0", 24.65, 42.29, 2.78, 94.06, 6.52, 8, 0},
      {"TERA", 41.22, 38.52, 2.79, 94.31, 6.49, 9, +1},
      {"modified CPC", 42.62, 15.40, 2.70, 94.06, 6.31, 10, -1},
      {"FBANK", 59.12, 12.77, 2.63, 93.65, 5.12, 11, 0},
  };
  return rows;
}

const std::vector<CostRowText> &PrintedCosts() {
  static const CostRowText large = {"", {"8.7E+17", "1.3E+18", "4.3E+17", "6.5E+17"}, "3.3E+18",
                                    {"1.2E+16", "6E+16", "4.7E+15", "6.1E+15"}, "8.2E+16", 97.4680};
  static const CostRowText base = {"", {"3.4E+17", "5.0E+17", "1.7E+17", "2.5E+17"}, "1.3E+18",
                                   {"4.7E+15", "2.3E+16", "1.8E+15", "2.4E+15"}, "3.2E+16", 97.4685};
  auto named = [](CostRowText r, const std::string &name) {
    r.model = name;
    return r;
  };
  static const std::vector<CostRowText> rows = {
      named(large, "WavLM Large"),
      named(base, "WavLM Base+"),
      named(base, "WavLM Base"),
      named(large, "wav2vec 2.0 Large"),
      named(large, "HuBERT Large"),
      named(base, "HuBERT Base"),
      named(base, "wav2vec 2.0 Base"),
      {"modified CPC", {"5.0E+16", "6.1E+16", "2.1E+16", "3.1E+16"}, "1.6E+17",
       {"6.5E+14", "2.8E+15", "2.7E+14", "3.7E+14"}, "4.1E+15", 97.4847},
      {"DeCoAR 2.0", {"2.3E+17", "3.3E+17", "1.1E+17", "1.7E+17"}, "8.5E+17",
       {"3.2E+15", "1.5E+16", "1.3E+15", "1.6E+15"}, "2.1E+16", 97.4699},
      {"TERA", {"1.2E+17", "1.7E+17", "5.7E+16", "8.6E+16"}, "4.4E+17",
       {"1.7E+15", "7.8E+15", "6.7E+14", "8.9E+14"}, "1.1E+16", 97.4718},
      {"FBANK", {"9.0E+15", "1.4E+14", "4.8E+14", "8.5E+14"}, "1.0E+16",
       {"9.2E+13", "6.6E+12", "4.4E+13", "7.8E+13"}, "2.2E+14", 97.8952},
  };
  return rows;
}

}  // namespace mbtest
