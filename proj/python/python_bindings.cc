// python/python_bindings.cc

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

// Low-level extension module.  Structured arguments and results cross the
// boundary as JSON text; arrays as numpy arrays.  The `minibench` package
// wraps these in a friendlier surface.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

#include "minibench/cost_model.h"
#include "minibench/extractors.h"
#include "minibench/feature_cache.h"
#include "minibench/fbank.h"
#include "minibench/metrics.h"
#include "minibench/pipeline.h"
#include "minibench/probes/ctc.h"
#include "minibench/sampler.h"
#include "minibench/scoring.h"

namespace py = pybind11;
using nlohmann::json;
using namespace minibench;

namespace {

using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const double> View(const F64Array &a) {
  return {a.data(), static_cast<std::size_t>(a.size())};
}

py::array_t<float> RecordArray(const FeatureRecord &r) {
  py::array_t<float> out({r.num_layers, r.num_frames, r.dim});
  std::copy(r.data.begin(), r.data.end(), out.mutable_data());
  return out;
}

FeatureRecord ArrayRecord(const std::string &utt_id, const F32Array &a) {
  if (a.ndim() != 3) throw InvalidArgument("feature array must be [layers, frames, dim]");
  FeatureRecord r(utt_id, static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
                  static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), r.data.begin());
  return r;
}

CostInputs CostFromJson(const std::string &text) {
  const json j = json::parse(text);
  CostInputs ci;
  ci.upstream_macs = j.value("upstream_macs", 0.0);
  ci.downstream_macs = j.value("downstream_macs", 0.0);
  ci.steps_full = j.value("steps_full", 0.0);
  ci.steps_mini = j.value("steps_mini", 0.0);
  ci.extraction_passes = j.value("extraction_passes", 0.0);
  ci.backward_ratio = j.value("backward_ratio", 2.0);
  return ci;
}

std::string LeaderboardJson(const Leaderboard &lb) {
  json entries = json::array();
  for (const auto &e : lb.entries)
    entries.push_back({{"model", e.model},
                       {"task_scores", e.task_scores},
                       {"score", e.score},
                       {"rank", e.rank},
                       {"rank_delta", e.rank_delta ? json(*e.rank_delta) : json()}});
  std::vector<std::string> tasks;
  for (TaskKind t : lb.tasks) tasks.emplace_back(TaskKindName(t));
  json j = {{"tasks", tasks},         {"baseline", lb.baseline},
            {"sota", lb.sota},        {"entries", entries},
            {"warnings", lb.warnings},
            {"spearman", lb.spearman ? json(*lb.spearman) : json()},
            {"text", lb.ToText()}};
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_minibench, m) {
  m.doc() = "minibench native core";
  m.attr("__version__") = kVersion;

  static py::exception<Error> error(m, "Error");
  static py::exception<FormatError> format_error(m, "FormatError", error.ptr());
  static py::exception<NotFoundError> not_found(m, "NotFoundError", error.ptr());
  static py::exception<InvalidArgument> invalid(m, "InvalidArgument", error.ptr());
  static py::exception<ConfigError> config_error(m, "ConfigError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const FormatError &e) {
      PyErr_SetString(format_error.ptr(), e.what());
    } catch (const NotFoundError &e) {
      PyErr_SetString(not_found.ptr(), e.what());
    } catch (const InvalidArgument &e) {
      PyErr_SetString(invalid.ptr(), e.what());
    } catch (const ConfigError &e) {
      PyErr_SetString(config_error.ptr(), e.what());
    } catch (const Error &e) {
      PyErr_SetString(error.ptr(), e.what());
    } catch (const json::exception &e) {
      PyErr_SetString(invalid.ptr(), e.what());
    }
  });

  // Losses and metrics.
  m.def("ctc_loss", [](const F64Array &log_probs, const std::vector<int> &label, int blank) {
    if (log_probs.ndim() != 2) throw InvalidArgument("log_probs must be [frames, vocab]");
    Mat<double> lp(log_probs.shape(0), log_probs.shape(1));
    std::copy(log_probs.data(), log_probs.data() + log_probs.size(), lp.data());
    CtcResult r = CtcLoss(lp, label, blank, true);
    py::array_t<double> grad({r.grad.rows(), r.grad.cols()});
    std::copy(r.grad.data(), r.grad.data() + r.grad.size(), grad.mutable_data());
    return py::make_tuple(r.loss, r.feasible, grad);
  }, py::arg("log_probs"), py::arg("label"), py::arg("blank") = 0);

  m.def("ctc_greedy_decode", [](const F64Array &log_probs, int blank) {
    if (log_probs.ndim() != 2) throw InvalidArgument("log_probs must be [frames, vocab]");
    Mat<double> lp(log_probs.shape(0), log_probs.shape(1));
    std::copy(log_probs.data(), log_probs.data() + log_probs.size(), lp.data());
    return CtcGreedyDecode(lp, blank);
  }, py::arg("log_probs"), py::arg("blank") = 0);

  m.def("si_sdr", [](const F64Array &est, const F64Array &ref, double cap) {
    return SiSdr(View(est), View(ref), cap);
  }, py::arg("estimate"), py::arg("reference"), py::arg("cap_db") = kSiSdrCapDb);

  m.def("si_sdri", [](const F64Array &est, const F64Array &mix, const F64Array &ref, double cap) {
    return SiSdri(View(est), View(mix), View(ref), cap);
  }, py::arg("estimate"), py::arg("mixture"), py::arg("reference"),
     py::arg("cap_db") = kSiSdrCapDb);

  m.def("wer", [](const std::string &ref, const std::string &hyp) {
    const auto r = TokenizeTranscript(ref), h = TokenizeTranscript(hyp);
    return Wer(r, h);
  }, py::arg("reference"), py::arg("hypothesis"));

  m.def("average_ranks", [](const std::vector<double> &v) { return AverageRanks(v); });

  m.def("spearman", [](const std::vector<std::string> &models_a, const std::vector<double> &ranks_a,
                       const std::vector<std::string> &models_b, const std::vector<double> &ranks_b) {
    return SpearmanRho(RankVector{models_a, ranks_a}, RankVector{models_b, ranks_b});
  });

  // Scoring.
  m.def("single_metric", [](const std::string &task, const std::map<std::string, double> &raw,
                            const std::string &stoi_scale) {
    ScoringOptions o = ScoringOptions::FromJson({{"stoi_scale", stoi_scale}});
    return ToSingleMetric(ParseTaskKind(task), raw, o);
  }, py::arg("task"), py::arg("raw"), py::arg("stoi_scale") = "fraction");

  m.def("normalized_score", &NormalizedScore, py::arg("scores"), py::arg("baseline"),
        py::arg("sota"));

  m.def("leaderboard", [](const std::vector<std::string> &tasks,
                          const std::vector<std::pair<std::string, std::vector<double>>> &rows,
                          const std::string &baseline,
                          const std::optional<std::vector<std::string>> &reference) {
    ScoreMatrix sm;
    for (const auto &t : tasks) sm.tasks.push_back(ParseTaskKind(t));
    for (const auto &[model, scores] : rows) sm.Add(model, scores);
    return LeaderboardJson(BuildLeaderboard(sm, baseline, reference));
  }, py::arg("tasks"), py::arg("rows"), py::arg("baseline"), py::arg("reference") = py::none());

  // Cost model.
  m.def("cost_full", [](const std::string &j) { return CostFullBenchmark(CostFromJson(j)); });
  m.def("cost_mini", [](const std::string &j) { return CostMiniBenchmark(CostFromJson(j)); });
  m.def("forward_macs", [](const std::string &arch, const std::vector<std::int64_t> &schedule) {
    return ForwardMacs(ArchSpec::FromJson(json::parse(arch)), schedule);
  }, py::arg("arch_json"), py::arg("schedule"));

  // Feature cache.
  m.def("encode_record", [](const std::string &utt_id, const F32Array &a) {
    return py::bytes(EncodeRecord(ArrayRecord(utt_id, a)));
  }, py::arg("utt_id"), py::arg("features"));

  m.def("decode_record", [](const py::bytes &b, const std::string &utt_id) {
    const std::string_view s = b;
    return RecordArray(DecodeRecord(s, utt_id));
  }, py::arg("data"), py::arg("utt_id") = "");

  m.def("pool_record", [](const F32Array &a, bool normalize) {
    const PooledRecord p = PoolRecord(ArrayRecord("", a), normalize);
    py::array_t<float> out({p.num_layers, p.dim});
    std::copy(p.data.begin(), p.data.end(), out.mutable_data());
    return out;
  }, py::arg("features"), py::arg("normalize") = true);

  m.def("write_cache", [](const std::filesystem::path &dir,
                          const std::vector<std::pair<std::string, F32Array>> &records) {
    CacheWriter w(dir);
    for (const auto &[id, a] : records) w.Write(ArrayRecord(id, a));
    w.Close();
    return w.index().Serialize();
  }, py::arg("dir"), py::arg("records"));

  py::class_<CacheReader>(m, "CacheReader")
      .def(py::init<std::filesystem::path>(), py::arg("dir"))
      .def("ids", [](const CacheReader &r) {
        std::vector<std::string> ids;
        for (const auto &e : r.index().entries()) ids.push_back(e.id);
        return ids;
      })
      .def("index_jsonl", [](const CacheReader &r) { return r.index().Serialize(); })
      .def("read", [](const CacheReader &r, const std::string &id) {
        return RecordArray(r.Read(id));
      }, py::arg("utt_id"))
      .def("__len__", [](const CacheReader &r) { return r.index().size(); });

  m.def("estimate_storage", [](const std::filesystem::path &manifest, int layers, int dim,
                               bool pooled, std::int64_t window, std::int64_t hop) {
    const StorageEstimate e = EstimateStorage(LoadManifest(manifest), layers, dim, DType::kF32,
                                              pooled, FrameRule{window, hop});
    return json{{"payload_bytes", e.payload_bytes}, {"header_bytes", e.header_bytes},
                {"num_records", e.num_records}, {"total", e.total()}}.dump();
  }, py::arg("manifest"), py::arg("layers"), py::arg("dim"), py::arg("pooled") = false,
     py::arg("window") = 400, py::arg("hop") = 160);

  // Features.
  m.def("extract", [](const std::string &spec, const std::string &task, const std::string &utt_id,
                      const F32Array &wave) {
    auto ex = MakeExtractor(json::parse(spec), ParseTaskKind(task));
    return RecordArray(ex->Extract(utt_id, {wave.data(), static_cast<std::size_t>(wave.size())}));
  }, py::arg("spec_json"), py::arg("task"), py::arg("utt_id"), py::arg("wave"));

  // Corpus and sampling.
  m.def("load_manifest", [](const std::filesystem::path &path) {
    return SerializeManifest(LoadManifest(path));
  }, py::arg("path"));

  m.def("apply_policy", [](const std::filesystem::path &manifest, const std::string &policy) {
    SampleResult r = ApplyPolicy(LoadManifest(manifest), SamplingPolicy::FromJson(json::parse(policy)));
    return py::make_tuple(SerializeManifest(r.subset), r.provenance.dump());
  }, py::arg("manifest"), py::arg("policy_json"));

  // Pipeline.
  m.def("run", [](const std::filesystem::path &config, const std::filesystem::path &out, int jobs,
                  std::optional<std::uint64_t> seed) {
    StageContext ctx{RunConfig::Load(config, seed), RunLayout{out}, jobs, {}, {}, {}};
    py::gil_scoped_release release;
    RunAll(ctx);
  }, py::arg("config"), py::arg("out"), py::arg("jobs") = 1, py::arg("seed") = py::none());

  m.def("render_report", &RenderReport, py::arg("run_dir"));
}
