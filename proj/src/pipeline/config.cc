// pipeline/config.cc

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
#include <mutex>
#include <set>

#include "minibench/extractors.h"
#include "minibench/pipeline.h"
#include "minibench/probes/probe.h"
#include "minibench/rng.h"

namespace minibench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

HeadKind HeadFor(TaskKind task) {
  switch (task) {
    case TaskKind::kAsr: return HeadKind::kBlstmCtc;
    case TaskKind::kSid: return HeadKind::kLinearSid;
    case TaskKind::kSe:
    case TaskKind::kSs: return HeadKind::kBlstmMask;
  }
  return HeadKind::kLinearSid;
}

fs::path Resolve(const fs::path &base, const std::string &p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

void RequireExists(const fs::path &base, const std::string &p, const std::string &what) {
  if (!fs::exists(Resolve(base, p)))
    throw ConfigError(what + " not found: " + Resolve(base, p).string());
}

std::vector<std::string> ReadRankingFile(const fs::path &path) {
  std::vector<std::string> out;
  std::string text = ReadFileBytes(path);
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty() && line[0] != '#') out.push_back(line);
    start = end + 1;
  }
  return out;
}

}  // namespace

RunConfig RunConfig::FromJson(const json &j, const fs::path &base_dir,
                              std::optional<std::uint64_t> seed_override) {
  RunConfig c;
  c.base_dir = base_dir;
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    c.name = j.value("name", std::string("run"));
    c.seed = seed_override ? *seed_override : j.value("seed", std::uint64_t{0});
    json canon;
    canon["name"] = c.name;
    canon["seed"] = c.seed;

    // Tasks, in the fixed ASR, SID, SE, SS order.
    if (!j.contains("tasks") || !j.at("tasks").is_object() || j.at("tasks").empty())
      throw ConfigError("config needs a non-empty \"tasks\" object");
    std::map<TaskKind, json> task_json;
    for (const auto &[name, body] : j.at("tasks").items()) {
      TaskKind kind;
      try {
        kind = ParseTaskKind(name);
      } catch (const Error &) {
        throw ConfigError("unknown task '" + name + "'");
      }
      task_json[kind] = body;
    }
    json tasks_canon = json::object();
    for (const auto &[kind, body] : task_json) {
      TaskSettings ts;
      ts.task = kind;
      const std::string tname(TaskKindName(kind));
      json tc;
      if (body.contains("synth")) {
        json s = body.at("synth");
        s["kind"] = tname;
        s["seed"] = c.StageSeed("synth", tname);
        ts.synth = SynthSpecFromJson(s);
        tc["synth"] = SynthSpecToJson(*ts.synth);
      } else if (body.contains("manifests")) {
        json m = json::object();
        for (const auto &[split, path] : body.at("manifests").items()) {
          const std::string p = path.get<std::string>();
          RequireExists(base_dir, p, tname + " " + split + " manifest");
          ts.manifests[ParseSplit(split)] = Resolve(base_dir, p);
          m[split] = p;
        }
        for (Split s : {Split::kTrain, Split::kDev, Split::kTest})
          if (!ts.manifests.count(s))
            throw ConfigError(tname + " needs a " + std::string(SplitName(s)) + " manifest");
        tc["manifests"] = m;
      } else {
        throw ConfigError(tname + " needs either \"synth\" or \"manifests\"");
      }
      json sampling = body.value("sampling", json{{"type", "identity"}});
      sampling["seed"] = c.StageSeed("sample", tname);
      ts.sampling = SamplingPolicy::FromJson(sampling);
      tc["sampling"] = ts.sampling.ToJson();

      ts.probe = body.value("probe", json::object());
      json check = ts.probe;
      check["head"] = HeadKindName(HeadFor(kind));
      check["num_layers"] = 1;
      check["input_dim"] = 1;
      check["num_outputs"] = 2;
      if (kind == TaskKind::kSs) check["num_masks"] = 2;
      if (kind == TaskKind::kSe) check["num_masks"] = 1;
      ProbeConfig::FromJson(check);
      tc["probe"] = ts.probe;
      ts.steps_full = body.value("steps_full", 0.0);
      tc["steps_full"] = ts.steps_full;
      tasks_canon[tname] = tc;
      c.tasks.push_back(std::move(ts));
    }
    canon["tasks"] = tasks_canon;

    // Models.
    if (!j.contains("models") || !j.at("models").is_array() || j.at("models").empty())
      throw ConfigError("config needs a non-empty \"models\" array");
    std::set<std::string> names;
    json models_canon = json::array();
    for (const auto &mj : j.at("models")) {
      ModelSpec m;
      m.name = mj.at("name").get<std::string>();
      if (m.name.empty() || m.name.find_first_of("/\\\t\n") != std::string::npos)
        throw ConfigError("model name '" + m.name + "' is not a valid id");
      if (!names.insert(m.name).second) throw ConfigError("duplicate model '" + m.name + "'");
      json mc = {{"name", m.name}};
      if (mj.contains("extractor")) {
        m.extractor = mj.at("extractor");
        for (const auto &ts : c.tasks) MakeExtractor(m.extractor, ts.task);
        mc["extractor"] = m.extractor;
      }
      if (mj.contains("caches")) {
        json cc = json::object();
        for (const auto &[task, path] : mj.at("caches").items()) {
          const std::string p = path.get<std::string>();
          RequireExists(base_dir, p, "cache for " + m.name + "/" + task);
          m.caches[ParseTaskKind(task)] = Resolve(base_dir, p);
          cc[task] = p;
        }
        mc["caches"] = cc;
      }
      for (const auto &ts : c.tasks)
        if (m.extractor.is_null() && !m.caches.count(ts.task))
          throw ConfigError("model '" + m.name + "' has neither an extractor nor a " +
                            std::string(TaskKindName(ts.task)) + " cache");
      if (mj.contains("frames")) {
        m.frames.window = mj.at("frames").at("window").get<std::int64_t>();
        m.frames.hop = mj.at("frames").at("hop").get<std::int64_t>();
        if (m.frames.window < 1 || m.frames.hop < 1)
          throw ConfigError("model '" + m.name + "': frame window and hop must be positive");
        mc["frames"] = {{"window", m.frames.window}, {"hop", m.frames.hop}};
      }
      if (mj.contains("arch")) {
        m.arch = ArchSpec::FromJson(mj.at("arch"));
        mc["arch"] = m.arch->ToJson();
      }
      models_canon.push_back(mc);
      c.models.push_back(std::move(m));
    }
    canon["models"] = models_canon;

    c.scoring = ScoringOptions::FromJson(j.value("scoring", json::object()));
    if (!names.count(c.scoring.baseline))
      throw ConfigError("baseline model '" + c.scoring.baseline + "' is not configured");
    canon["scoring"] = c.scoring.ToJson();

    const json metrics = j.value("metrics", json::object());
    json metrics_canon = json::object();
    for (const std::string id : {"pesq", "stoi"}) {
      const json spec = metrics.value(id, json{{"builtin", id == "pesq" ? "seg_snr" : "correlation"}});
      c.metrics[id] = MetricPlugin::FromJson(id, spec);
      if (c.metrics[id].kind == MetricPlugin::Kind::kSidecar) {
        RequireExists(base_dir, c.metrics[id].sidecar.string(), id + " sidecar");
        c.metrics[id].sidecar = Resolve(base_dir, c.metrics[id].sidecar.string());
      }
      metrics_canon[id] = spec;
    }
    canon["metrics"] = metrics_canon;
    c.stoi_report_scale = j.value("stoi_report_scale", c.stoi_report_scale);
    canon["stoi_report_scale"] = c.stoi_report_scale;

    if (j.contains("reference_ranking")) {
      const json &r = j.at("reference_ranking");
      if (r.is_string()) {
        const std::string p = r.get<std::string>();
        RequireExists(base_dir, p, "reference ranking");
        c.reference_ranking = ReadRankingFile(Resolve(base_dir, p));
      } else {
        c.reference_ranking = r.get<std::vector<std::string>>();
      }
      std::set<std::string> ref(c.reference_ranking->begin(), c.reference_ranking->end());
      if (ref != names || ref.size() != c.reference_ranking->size())
        throw ConfigError("reference ranking must list every model exactly once");
      canon["reference_ranking"] = *c.reference_ranking;
    }

    if (j.contains("cost")) {
      const json &cj = j.at("cost");
      CostSettings cs;
      cs.upstream_schedule = cj.at("upstream_schedule").get<std::vector<std::int64_t>>();
      cs.downstream_schedule = cj.at("downstream_schedule").get<std::vector<std::int64_t>>();
      cs.backward_ratio = cj.value("backward_ratio", 2.0);
      if (cs.upstream_schedule.empty() || cs.downstream_schedule.empty())
        throw ConfigError("cost schedules must be non-empty");
      if (!(cs.backward_ratio >= 0.0)) throw ConfigError("backward_ratio must be >= 0");
      c.cost = cs;
      canon["cost"] = {{"upstream_schedule", cs.upstream_schedule},
                       {"downstream_schedule", cs.downstream_schedule},
                       {"backward_ratio", cs.backward_ratio}};
    }
    c.canonical = std::move(canon);
  } catch (const ConfigError &) {
    throw;
  } catch (const json::exception &e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const Error &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::Load(const fs::path &path, std::optional<std::uint64_t> seed_override) {
  json j;
  try {
    j = json::parse(ReadFileBytes(path));
  } catch (const json::exception &e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const Error &e) {
    throw ConfigError(e.what());
  }
  return FromJson(j, path.parent_path(), seed_override);
}

std::uint64_t RunConfig::Hash() const { return Fnv1a64(canonical.dump()); }

json RunConfig::Provenance() const {
  return {{"config_hash", HexDigest(Hash())}, {"seed", seed}, {"version", kVersion}};
}

std::string RunConfig::TsvHeader() const {
  return std::string("# minibench ") + kVersion + " config=" + HexDigest(Hash()) +
         " seed=" + std::to_string(seed) + "\n";
}

const TaskSettings &RunConfig::Task(TaskKind task) const {
  for (const auto &t : tasks)
    if (t.task == task) return t;
  throw InvalidArgument("task " + std::string(TaskKindName(task)) + " is not configured");
}

const ModelSpec &RunConfig::Model(const std::string &name) const {
  for (const auto &m : models)
    if (m.name == name) return m;
  throw InvalidArgument("model '" + name + "' is not configured");
}

std::uint64_t RunConfig::StageSeed(std::string_view stage, std::string_view key) const {
  return Rng::Derive(seed, std::string(stage) + "/" + std::string(key));
}

fs::path RunLayout::CorpusDir(TaskKind t) const {
  return root / "corpus" / std::string(TaskKindName(t));
}

fs::path RunLayout::SplitManifest(TaskKind t, Split s) const {
  return CorpusDir(t) / (std::string(SplitName(s)) + ".jsonl");
}

fs::path RunLayout::SubsetManifest(TaskKind t) const {
  return root / "subsets" / std::string(TaskKindName(t)) / "train.jsonl";
}

fs::path RunLayout::CacheDir(const std::string &model, TaskKind t, Split s) const {
  return root / "cache" / model / std::string(TaskKindName(t)) / std::string(SplitName(s));
}

fs::path RunLayout::ProbeDir(const std::string &model, TaskKind t) const {
  return root / "probes" / model / std::string(TaskKindName(t));
}

fs::path RunLayout::EvalDir(const std::string &model, TaskKind t) const {
  return root / "eval" / model / std::string(TaskKindName(t));
}

bool StageContext::Wants(const std::string &model) const {
  return only_models.empty() ||
         std::find(only_models.begin(), only_models.end(), model) != only_models.end();
}

bool StageContext::Wants(TaskKind task) const {
  return only_tasks.empty() ||
         std::find(only_tasks.begin(), only_tasks.end(), task) != only_tasks.end();
}

void StageContext::Log(const std::string &message) const {
  static std::mutex mu;
  if (!log) return;
  std::lock_guard<std::mutex> lock(mu);
  log(message);
}

}  // namespace minibench
