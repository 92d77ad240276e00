// cost_model.cc

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

#include "minibench/cost_model.h"

#include <cctype>
#include <cmath>
#include <cstdio>

#include "minibench/common.h"

namespace minibench {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void RequirePositive(std::int64_t v, const char *what) {
  if (v <= 0) throw InvalidArgument(std::string("arch spec: ") + what + " must be positive");
}

std::string Sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2E", v);
  return buf;
}

std::string Fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

void ArchSpec::Validate() const {
  for (const auto &layer : layers) {
    std::visit(Overloaded{
                   [](const LinearSpec &l) {
                     RequirePositive(l.in, "linear in");
                     RequirePositive(l.out, "linear out");
                   },
                   [](const Conv1dSpec &c) {
                     RequirePositive(c.in_ch, "conv1d in_ch");
                     RequirePositive(c.out_ch, "conv1d out_ch");
                     RequirePositive(c.kernel, "conv1d kernel");
                     RequirePositive(c.stride, "conv1d stride");
                   },
                   [](const LstmSpec &l) {
                     RequirePositive(l.input, "lstm input");
                     RequirePositive(l.hidden, "lstm hidden");
                   },
                   [](const AttentionSpec &a) {
                     RequirePositive(a.d_model, "attention d_model");
                     RequirePositive(a.ff_dim, "attention ff_dim");
                     RequirePositive(a.heads, "attention heads");
                   },
               },
               layer);
  }
}

ArchSpec ArchSpec::FromJson(const json &j) {
  ArchSpec a;
  a.name = j.value("name", std::string());
  a.input_stride_ms = j.value("input_stride_ms", 0.0);
  for (const auto &l : j.at("layers")) {
    const std::string type = l.at("type").get<std::string>();
    LayerSpec spec;
    if (type == "linear") {
      spec = LinearSpec{l.at("in").get<std::int64_t>(), l.at("out").get<std::int64_t>()};
    } else if (type == "conv1d") {
      spec = Conv1dSpec{l.at("in").get<std::int64_t>(), l.at("out").get<std::int64_t>(),
                        l.at("kernel").get<std::int64_t>(), l.value("stride", std::int64_t{1})};
    } else if (type == "lstm") {
      spec = LstmSpec{l.at("input").get<std::int64_t>(), l.at("hidden").get<std::int64_t>(),
                      l.value("bidirectional", false)};
    } else if (type == "attention") {
      spec = AttentionSpec{l.at("d_model").get<std::int64_t>(), l.at("ff_dim").get<std::int64_t>(),
                           l.value("heads", std::int64_t{1})};
    } else {
      throw InvalidArgument("arch spec: unknown layer type '" + type + "'");
    }
    const int repeat = l.value("repeat", 1);
    if (repeat < 1) throw InvalidArgument("arch spec: repeat must be >= 1");
    for (int r = 0; r < repeat; ++r) a.layers.push_back(spec);
  }
  a.Validate();
  return a;
}

json ArchSpec::ToJson() const {
  json layers_json = json::array();
  for (const auto &layer : layers) {
    layers_json.push_back(std::visit(
        Overloaded{
            [](const LinearSpec &l) -> json {
              return {{"type", "linear"}, {"in", l.in}, {"out", l.out}};
            },
            [](const Conv1dSpec &c) -> json {
              return {{"type", "conv1d"}, {"in", c.in_ch}, {"out", c.out_ch},
                      {"kernel", c.kernel}, {"stride", c.stride}};
            },
            [](const LstmSpec &l) -> json {
              return {{"type", "lstm"}, {"input", l.input}, {"hidden", l.hidden},
                      {"bidirectional", l.bidirectional}};
            },
            [](const AttentionSpec &a) -> json {
              return {{"type", "attention"}, {"d_model", a.d_model}, {"ff_dim", a.ff_dim},
                      {"heads", a.heads}};
            },
        },
        layer));
  }
  return {{"name", name}, {"input_stride_ms", input_stride_ms}, {"layers", layers_json}};
}

ArchSpec BlstmProbeArch(std::int64_t input_dim, std::int64_t hidden, int layers,
                        std::int64_t outputs) {
  ArchSpec a;
  a.name = "blstm_probe";
  std::int64_t width = input_dim;
  for (int l = 0; l < layers; ++l) {
    a.layers.push_back(LstmSpec{width, hidden, true});
    width = 2 * hidden;
  }
  a.layers.push_back(LinearSpec{width, outputs});
  a.Validate();
  return a;
}

double LayerMacs(const LayerSpec &layer, std::int64_t frames, std::int64_t *frames_out) {
  const double T = static_cast<double>(frames);
  *frames_out = frames;
  return std::visit(
      Overloaded{
          [&](const LinearSpec &l) { return static_cast<double>(l.in) * l.out * T; },
          [&](const Conv1dSpec &c) {
            const std::int64_t out = frames < c.kernel ? 0 : (frames - c.kernel) / c.stride + 1;
            *frames_out = out;
            return static_cast<double>(c.in_ch) * c.out_ch * c.kernel * static_cast<double>(out);
          },
          [&](const LstmSpec &l) {
            const double per_dir = 4.0 * l.hidden * static_cast<double>(l.input + l.hidden) * T;
            return l.bidirectional ? 2.0 * per_dir : per_dir;
          },
          [&](const AttentionSpec &a) {
            const double d = static_cast<double>(a.d_model);
            return (4.0 * d * d + 2.0 * d * a.ff_dim) * T + 2.0 * d * T * T;
          },
      },
      layer);
}

double ForwardMacs(const ArchSpec &arch, std::span<const std::int64_t> frame_schedule) {
  if (frame_schedule.empty()) throw InvalidArgument("forward macs: empty frame schedule");
  double total = 0.0;
  for (std::int64_t frames : frame_schedule) {
    if (frames < 0) throw InvalidArgument("forward macs: negative frame count");
    std::int64_t t = frames;
    for (const auto &layer : arch.layers) {
      std::int64_t next = t;
      total += LayerMacs(layer, t, &next);
      t = next;
    }
  }
  return total;
}

void CostInputs::Validate() const {
  for (double v : {upstream_macs, downstream_macs, steps_full, steps_mini, extraction_passes,
                   backward_ratio})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidArgument("cost inputs must be finite and non-negative");
}

double CostFullBenchmark(const CostInputs &ci) {
  ci.Validate();
  return ci.upstream_macs * ci.steps_full +
         ci.downstream_macs * (1.0 + ci.backward_ratio) * ci.steps_full;
}

double CostMiniBenchmark(const CostInputs &ci) {
  ci.Validate();
  return ci.upstream_macs * ci.extraction_passes +
         ci.downstream_macs * (1.0 + ci.backward_ratio) * ci.steps_mini;
}

double ReductionPercent(double full, double mini) {
  if (!(full > 0.0)) throw InvalidArgument("reduction: full cost must be positive");
  return 100.0 * (1.0 - mini / full);
}

void CostReport::AddRow(const std::string &model, const std::map<std::string, double> &full,
                        const std::map<std::string, double> &mini) {
  CostRow row;
  row.model = model;
  for (const auto &task : tasks) {
    auto f = full.find(task);
    auto m = mini.find(task);
    if (f == full.end() || m == mini.end())
      throw InvalidArgument("cost report: model '" + model + "' lacks task '" + task + "'");
    row.full.push_back(f->second);
    row.mini.push_back(m->second);
    row.total_full += f->second;
    row.total_mini += m->second;
  }
  if (full.size() != tasks.size() || mini.size() != tasks.size())
    throw InvalidArgument("cost report: model '" + model + "' has tasks outside the report");
  row.reduction_pct = ReductionPercent(row.total_full, row.total_mini);
  rows.push_back(std::move(row));
}

std::string CostReport::ToTsv() const {
  std::string out = "model";
  for (const auto &t : tasks) out += "\tfull_" + t;
  out += "\tfull_total";
  for (const auto &t : tasks) out += "\tmini_" + t;
  out += "\tmini_total\treduction_pct\n";
  for (const auto &r : rows) {
    out += r.model;
    for (double v : r.full) out += "\t" + Sci(v);
    out += "\t" + Sci(r.total_full);
    for (double v : r.mini) out += "\t" + Sci(v);
    out += "\t" + Sci(r.total_mini) + "\t" + Fixed(r.reduction_pct, 4) + "\n";
  }
  return out;
}

std::string CostReport::ToText() const {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {"Model"};
  for (const auto &t : tasks) header.push_back("Full " + t);
  header.push_back("Full total");
  for (const auto &t : tasks) header.push_back("Mini " + t);
  header.push_back("Mini total");
  header.push_back("Reduction (%)");
  cells.push_back(header);
  for (const auto &r : rows) {
    std::vector<std::string> line = {r.model};
    for (double v : r.full) line.push_back(Sci(v));
    line.push_back(Sci(r.total_full));
    for (double v : r.mini) line.push_back(Sci(v));
    line.push_back(Sci(r.total_mini));
    line.push_back(Fixed(r.reduction_pct, 4));
    cells.push_back(line);
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto &line : cells)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      std::string cell = cells[r][i];
      if (i == 0) cell.resize(width[i], ' ');
      else cell = std::string(width[i] - cell.size(), ' ') + cell;
      out += (i ? "  " : "") + cell;
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

Interval PrintedInterval(std::string_view text) {
  std::string s(text);
  const auto e = s.find_first_of("eE");
  const std::string mantissa = s.substr(0, e);
  const int exponent = e == std::string::npos ? 0 : std::stoi(s.substr(e + 1));
  const auto dot = mantissa.find('.');
  const int decimals =
      dot == std::string::npos ? 0 : static_cast<int>(mantissa.size() - dot - 1);
  std::size_t used = 0;
  const double value = std::stod(s, &used);
  if (used != s.size()) throw InvalidArgument("not a decimal number: " + s);
  const double half = 0.5 * std::pow(10.0, exponent - decimals);
  return {value - half, value + half};
}

}  // namespace minibench
