// pipeline/report.cc

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
#include <cstdio>

#include "minibench/pipeline.h"
#include "minibench/scoring.h"

namespace minibench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string Kilobytes(std::uint64_t bytes) {
  const double kb = static_cast<double>(bytes) / 1024.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", kb >= 100.0 ? 0 : kb >= 10.0 ? 1 : 2, kb);
  return buf;
}

// Display width counting each UTF-8 code point once.
std::size_t Width(const std::string &s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

std::string Section(const std::string &title) {
  return "\n" + title + "\n" + std::string(title.size(), '=') + "\n";
}

std::string Table(const std::vector<std::vector<std::string>> &cells) {
  std::vector<std::size_t> width;
  for (const auto &row : cells) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], Width(row[i]));
  }
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      const std::string &c = cells[r][i];
      const std::string pad(width[i] - Width(c), ' ');
      out += (i ? "  " : "") + (i == 0 ? c + pad : pad + c);
    }
    out += "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      out += std::string(total - 2, '-') + "\n";
    }
  }
  return out;
}

std::optional<json> TryJson(const fs::path &path) {
  if (!fs::exists(path)) return std::nullopt;
  try {
    return json::parse(ReadFileBytes(path));
  } catch (const json::exception &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::optional<std::string> TryText(const fs::path &path) {
  if (!fs::exists(path)) return std::nullopt;
  return ReadFileBytes(path);
}

}  // namespace

std::string RenderStorage(const json &storage) {
  const auto tasks = storage.at("tasks").get<std::vector<std::string>>();
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, std::string>> cells;
  for (const auto &r : storage.at("rows")) {
    const std::string model = r.at("model").get<std::string>();
    if (!cells.count(model)) order.push_back(model);
    cells[model][r.at("task").get<std::string>()] =
        Kilobytes(r.at("full_bytes").get<std::uint64_t>()) + " / " +
        Kilobytes(r.at("mini_bytes").get<std::uint64_t>());
  }
  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header = {""};
  header.insert(header.end(), tasks.begin(), tasks.end());
  table.push_back(header);
  for (const auto &model : order) {
    std::vector<std::string> line = {model};
    for (const auto &t : tasks) {
      auto it = cells[model].find(t);
      line.push_back(it == cells[model].end() ? "-" : it->second);
    }
    table.push_back(line);
  }
  return Table(table);
}

std::string RenderReport(const fs::path &run_dir) {
  const auto run = TryJson(run_dir / "run.json");
  const auto board = TryJson(run_dir / "leaderboard.json");
  const auto board_text = TryText(run_dir / "leaderboard.txt");
  const auto cost_text = TryText(run_dir / "cost.txt");
  const auto storage = TryJson(run_dir / "storage.json");
  if (!run && !board && !cost_text && !storage)
    throw NotFoundError("no run artifacts in " + run_dir.string());

  std::string out = "minibench run report\n";
  for (const auto *src : {&run, &board, &storage}) {
    if (!*src) continue;
    const json &p = **src;
    out += "config " + p.value("config_hash", std::string("?")) + "  seed " +
           std::to_string(p.value("seed", std::uint64_t{0})) + "  version " +
           p.value("version", std::string("?")) + "\n";
    break;
  }

  out += Section("Leaderboard");
  if (board_text) out += *board_text;
  else out += "(absent: score stage not run)\n";

  out += Section("Rank changes vs reference");
  if (!board) {
    out += "(absent: score stage not run)\n";
  } else if (board->at("spearman").is_null()) {
    out += "(no reference ranking configured)\n";
  } else {
    std::vector<std::vector<std::string>> table = {{"Model", "Rank", "Change"}};
    for (const auto &e : board->at("entries")) {
      const double delta = e.at("rank_delta").get<double>();
      char rank[32];
      std::snprintf(rank, sizeof(rank), "%g", e.at("rank").get<double>());
      const std::string label = RankDeltaLabel(delta);
      table.push_back({e.at("model").get<std::string>(), rank, label.empty() ? "=" : label});
    }
    out += Table(table);
    char rho[64];
    std::snprintf(rho, sizeof(rho), "Spearman rho: %.5f\n", board->at("spearman").get<double>());
    out += rho;
  }

  out += Section("Training cost (MACs)");
  if (cost_text) out += *cost_text;
  else out += "(absent: cost stage not run)\n";

  out += Section("Storage (KB, full / mini)");
  if (storage) out += RenderStorage(*storage);
  else out += "(absent: extract stage not run)\n";
  return out;
}

}  // namespace minibench
