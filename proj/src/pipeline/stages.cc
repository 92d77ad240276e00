// pipeline/stages.cc

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
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <set>
#include <thread>

#include "minibench/extractors.h"
#include "minibench/pipeline.h"
#include "minibench/probes/mask.h"
#include "minibench/probes/probe.h"
#include "minibench/probes/stft.h"
#include "minibench/probes/trainer.h"
#include "minibench/wav.h"

namespace minibench {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr Split kSplits[] = {Split::kTrain, Split::kDev, Split::kTest};

std::string Name(TaskKind t) { return std::string(TaskKindName(t)); }

std::string Fixed(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void WriteJson(const fs::path &path, const json &j) {
  fs::create_directories(path.parent_path());
  WriteFileAtomic(path, j.dump(2) + "\n");
}

void WriteText(const fs::path &path, const std::string &text) {
  fs::create_directories(path.parent_path());
  WriteFileAtomic(path, text);
}

json ReadJson(const fs::path &path) {
  try {
    return json::parse(ReadFileBytes(path));
  } catch (const json::exception &e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// Runs fn(0..n-1) on up to `jobs` threads.  The first failing index, in
// index order, is rethrown so failures do not depend on scheduling.
template <typename F>
void ForEachJob(std::size_t n, int jobs, F fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, jobs)));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

struct Job {
  const ModelSpec *model;
  TaskKind task;
};

std::vector<Job> Jobs(const StageContext &ctx) {
  std::vector<Job> jobs;
  for (const auto &m : ctx.config.models) {
    if (!ctx.Wants(m.name)) continue;
    for (const auto &t : ctx.config.tasks)
      if (ctx.Wants(t.task)) jobs.push_back({&m, t.task});
  }
  return jobs;
}

// Manifest of a split before sampling.
Manifest SourceManifest(const StageContext &ctx, TaskKind task, Split split) {
  const TaskSettings &ts = ctx.config.Task(task);
  const fs::path path = ts.synth ? ctx.layout.SplitManifest(task, split) : ts.manifests.at(split);
  if (!fs::exists(path))
    throw NotFoundError("manifest " + path.string() + " is missing; run the synth stage first");
  return LoadManifest(path, task);
}

fs::path AbsoluteNormal(const fs::path &p) { return fs::absolute(p).lexically_normal(); }

// Re-expresses every audio reference relative to `dir`.
void Rebase(Manifest *m, const fs::path &dir) {
  const fs::path to = AbsoluteNormal(dir);
  auto rebase = [&](std::string *ref) {
    *ref = AbsoluteNormal(m->Resolve(*ref)).lexically_relative(to).generic_string();
  };
  for (auto &u : m->utterances) {
    rebase(&u.audio);
    for (auto &[key, ref] : u.refs) rebase(&ref);
  }
  m->base_dir = dir;
}

std::vector<float> ReadAudio(const Manifest &m, const std::string &ref) {
  return ReadWav(m.Resolve(ref)).Normalized();
}

std::vector<double> ToDouble(const std::vector<float> &v) { return {v.begin(), v.end()}; }

// --- Features ------------------------------------------------------------

std::unique_ptr<FeatureExtractor> Extractor(const ModelSpec &m, TaskKind task) {
  if (m.extractor.is_null()) return nullptr;
  return MakeExtractor(m.extractor, task);
}

FrameRule Framing(const ModelSpec &m, TaskKind task) {
  if (auto ex = Extractor(m, task)) return ex->frames();
  return m.frames;
}

fs::path FeatureDir(const StageContext &ctx, const ModelSpec &m, TaskKind task, Split split) {
  auto it = m.caches.find(task);
  if (it != m.caches.end()) return it->second;
  return ctx.layout.CacheDir(m.name, task, split);
}

// Audio paths enter relative to the cache, so relocating a run keeps stamps.
std::string CacheContentHash(const FeatureExtractor &ex, bool pooled, const Manifest &manifest,
                             const fs::path &dir) {
  json j = {{"extractor", ex.Describe()}, {"pooled", pooled}};
  std::string key = j.dump();
  const fs::path base = AbsoluteNormal(dir);
  for (const auto &u : manifest.utterances)
    key += "\n" + u.id + "\t" +
           AbsoluteNormal(manifest.Resolve(u.audio)).lexically_relative(base).generic_string();
  return HexDigest(Fnv1a64(key));
}

// Writes one cache directory unless its stamp already matches.  Returns true
// if the cache was (re)built.
bool ExtractCache(const StageContext &ctx, const FeatureExtractor &ex, bool pooled,
                  const Manifest &manifest, const fs::path &dir) {
  const std::string hash = CacheContentHash(ex, pooled, manifest, dir);
  const fs::path stamp = dir / "cache.json";
  if (fs::exists(stamp) && fs::exists(dir / "index.jsonl")) {
    try {
      if (ReadJson(stamp).value("content_hash", std::string()) == hash) return false;
    } catch (const FormatError &) {
    }
  }
  fs::path tmp = dir;
  tmp += ".partial";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  {
    CacheWriter writer(tmp);
    for (const auto &u : manifest.utterances) {
      const fs::path audio = manifest.Resolve(u.audio);
      if (!fs::exists(audio)) throw NotFoundError("audio of '" + u.id + "' missing: " + audio.string());
      const std::vector<float> wave = ReadWav(audio).Normalized();
      FeatureRecord rec = ex.Extract(u.id, wave);
      if (pooled) rec = PoolRecord(rec, true).AsRecord();
      writer.Write(rec);
    }
    writer.Close();
  }
  json s = ctx.config.Provenance();
  s["content_hash"] = hash;
  s["extractor"] = ex.Describe();
  s["pooled"] = pooled;
  s["num_records"] = manifest.size();
  WriteJson(tmp / "cache.json", s);
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  fs::rename(tmp, dir);
  return true;
}

std::shared_ptr<const FeatureRecord> LoadFeatures(const CacheReader &reader, const std::string &id,
                                                  TaskKind task) {
  FeatureRecord rec = reader.Read(id);
  if (task == TaskKind::kSid && rec.num_frames > 1) rec = PoolRecord(rec, true).AsRecord();
  return std::make_shared<const FeatureRecord>(std::move(rec));
}

// --- Task data -----------------------------------------------------------

struct LabelMaps {
  std::vector<std::string> tokens;  // id - 1 -> token
  std::map<std::string, int> token_ids;
  std::map<std::string, int> speakers;
};

LabelMaps BuildLabels(const StageContext &ctx, TaskKind task) {
  LabelMaps maps;
  if (task != TaskKind::kAsr && task != TaskKind::kSid) return maps;
  const Manifest train = SourceManifest(ctx, task, Split::kTrain);
  std::set<std::string> tokens, speakers;
  for (const auto &u : train.utterances) {
    if (u.transcript) tokens.insert(u.transcript->begin(), u.transcript->end());
    if (u.speaker) speakers.insert(*u.speaker);
  }
  maps.tokens.assign(tokens.begin(), tokens.end());
  for (std::size_t i = 0; i < maps.tokens.size(); ++i)
    maps.token_ids[maps.tokens[i]] = static_cast<int>(i) + 1;
  int next = 0;
  for (const auto &s : speakers) maps.speakers[s] = next++;
  return maps;
}

struct Signals {
  std::vector<double> mixture;
  std::vector<std::vector<double>> references;
  Spectrogram mixture_spec;
};

struct TaskItems {
  TaskKind task;
  Manifest manifest;
  std::vector<ProbeExample> examples;  // manifest order
  std::vector<Signals> signals;        // SE/SS
};

const StftOptions kMaskStft{};

TaskItems BuildItems(const StageContext &ctx, const ModelSpec &m, TaskKind task, Split split,
                     const LabelMaps &labels, double mask_cap) {
  TaskItems items;
  items.task = task;
  items.manifest = LoadTaskManifest(ctx, task, split);
  const CacheReader reader(FeatureDir(ctx, m, task, split));
  const FrameRule rule = Framing(m, task);
  for (const auto &u : items.manifest.utterances) {
    ProbeExample ex;
    ex.id = u.id;
    ex.features = LoadFeatures(reader, u.id, task);
    switch (task) {
      case TaskKind::kAsr:
        for (const auto &tok : *u.transcript) {
          auto it = labels.token_ids.find(tok);
          if (it == labels.token_ids.end()) {
            if (split == Split::kTrain) throw InvalidArgument("unknown token '" + tok + "'");
            continue;
          }
          ex.tokens.push_back(it->second);
        }
        break;
      case TaskKind::kSid: {
        auto it = labels.speakers.find(*u.speaker);
        ex.label = it == labels.speakers.end() ? -1 : it->second;
        break;
      }
      case TaskKind::kSe:
      case TaskKind::kSs: {
        Signals sig;
        const bool se = task == TaskKind::kSe;
        sig.mixture = ToDouble(ReadAudio(items.manifest, se ? u.refs.at("noisy") : u.refs.at("mix")));
        for (const char *key : se ? std::vector<const char *>{"clean"}
                                  : std::vector<const char *>{"src1", "src2"})
          sig.references.push_back(ToDouble(ReadAudio(items.manifest, u.refs.at(key))));
        sig.mixture_spec = Stft(std::span<const double>(sig.mixture), kMaskStft);
        for (const auto &ref : sig.references)
          ex.mask_targets.push_back(
              InpsmMask(sig.mixture_spec, Stft(std::span<const double>(ref), kMaskStft), mask_cap));
        const Spectrogram &y = sig.mixture_spec;
        ex.mixture_magnitude.resize(y.num_frames, y.num_bins());
        for (int t = 0; t < y.num_frames; ++t)
          for (int f = 0; f < y.num_bins(); ++f)
            ex.mixture_magnitude(t, f) = static_cast<float>(std::abs(y.at(t, f)));
        ex.frame_map = MapFramesToFeatures(y.num_frames, kMaskStft, static_cast<int>(rule.window),
                                           static_cast<int>(rule.hop), ex.features->num_frames);
        items.signals.push_back(std::move(sig));
        break;
      }
    }
    items.examples.push_back(std::move(ex));
  }
  if (items.examples.empty())
    throw InvalidArgument(Name(task) + " " + std::string(SplitName(split)) + " set is empty");
  return items;
}

ProbeConfig MakeProbeConfig(const StageContext &ctx, const ModelSpec &m, TaskKind task,
                            const FeatureRecord &sample, const LabelMaps &labels) {
  json j = ctx.config.Task(task).probe;
  j["num_layers"] = sample.num_layers;
  j["input_dim"] = sample.dim;
  j["seed"] = ctx.config.StageSeed("train", m.name + "/" + Name(task));
  switch (task) {
    case TaskKind::kAsr:
      j["head"] = "blstm_ctc";
      j["num_outputs"] = static_cast<int>(labels.tokens.size()) + 1;
      break;
    case TaskKind::kSid:
      j["head"] = "linear_sid";
      j["num_outputs"] = static_cast<int>(labels.speakers.size());
      j["normalize_layers"] = false;  // pooled records are normalized already
      break;
    case TaskKind::kSe:
      j["head"] = "blstm_mask";
      j["num_outputs"] = kMaskStft.num_bins();
      j["num_masks"] = 1;
      j["pit"] = false;
      break;
    case TaskKind::kSs:
      j["head"] = "blstm_mask";
      j["num_outputs"] = kMaskStft.num_bins();
      j["num_masks"] = 2;
      if (!j.contains("pit")) j["pit"] = true;
      break;
  }
  return ProbeConfig::FromJson(j);
}

double MaskCap(const StageContext &ctx, TaskKind task) {
  return ctx.config.Task(task).probe.value("mask_cap", 1.0);
}

// --- Per-utterance evaluation ---------------------------------------------

struct UttResult {
  double value = 0.0;  // errors (ASR), correct (SID) or SI-SDRi (SE/SS)
  std::size_t ref_length = 0;
  std::string hypothesis;
  std::vector<std::vector<double>> estimates;  // SE/SS, in reference order
};

UttResult Evaluate(const Probe<float> &probe, const TaskItems &items, std::size_t i,
                   const LabelMaps &labels) {
  const ProbeExample &ex = items.examples[i];
  const Utterance &u = items.manifest.utterances[i];
  UttResult r;
  switch (items.task) {
    case TaskKind::kAsr: {
      std::vector<std::string> hyp;
      for (int id : probe.Decode(*ex.features)) hyp.push_back(labels.tokens.at(id - 1));
      const EditCounts e = AlignEdits(*u.transcript, hyp);
      r.value = static_cast<double>(e.errors());
      r.ref_length = u.transcript->size();
      for (const auto &w : hyp) r.hypothesis += (r.hypothesis.empty() ? "" : " ") + w;
      break;
    }
    case TaskKind::kSid: {
      const int pred = probe.PredictClass(*ex.features);
      r.value = pred == ex.label ? 1.0 : 0.0;
      for (const auto &[name, id] : labels.speakers)
        if (id == pred) r.hypothesis = name;
      break;
    }
    case TaskKind::kSe:
    case TaskKind::kSs: {
      const Signals &sig = items.signals[i];
      const auto masks = probe.PredictMasks(*ex.features, ex.frame_map);
      std::vector<std::vector<double>> est;
      for (const auto &mask : masks) est.push_back(Istft(ApplyMask(sig.mixture_spec, mask)));
      const auto &refs = sig.references;
      if (est.size() == 1) {
        r.value = SiSdri(est[0], sig.mixture, refs[0]);
        r.estimates = std::move(est);
      } else {
        const double keep = (SiSdri(est[0], sig.mixture, refs[0]) + SiSdri(est[1], sig.mixture, refs[1])) / 2;
        const double swap = (SiSdri(est[1], sig.mixture, refs[0]) + SiSdri(est[0], sig.mixture, refs[1])) / 2;
        if (swap > keep) std::swap(est[0], est[1]);
        r.value = std::max(keep, swap);
        r.estimates = std::move(est);
      }
      break;
    }
  }
  return r;
}

// Higher is better: 1 - WER, accuracy, mean SI-SDRi.
double DevMetric(const Probe<float> &probe, const TaskItems &items, const LabelMaps &labels) {
  double sum = 0.0;
  std::size_t ref = 0;
  for (std::size_t i = 0; i < items.examples.size(); ++i) {
    const UttResult r = Evaluate(probe, items, i, labels);
    sum += r.value;
    ref += r.ref_length;
  }
  if (items.task == TaskKind::kAsr) return 1.0 - sum / static_cast<double>(std::max<std::size_t>(1, ref));
  return sum / static_cast<double>(items.examples.size());
}

}  // namespace

// --- Stages ---------------------------------------------------------------

Manifest LoadTaskManifest(const StageContext &ctx, TaskKind task, Split split) {
  if (split != Split::kTrain) return SourceManifest(ctx, task, split);
  const fs::path path = ctx.layout.SubsetManifest(task);
  if (!fs::exists(path))
    throw NotFoundError("training subset " + path.string() + " is missing; run the sample stage");
  return LoadManifest(path, task);
}

void RunSynth(const StageContext &ctx) {
  for (const auto &ts : ctx.config.tasks) {
    if (!ctx.Wants(ts.task) || !ts.synth) continue;
    const fs::path dir = ctx.layout.CorpusDir(ts.task);
    const fs::path stamp = dir / "corpus.json";
    const json spec = SynthSpecToJson(*ts.synth);
    bool fresh = fs::exists(stamp);
    for (Split s : kSplits) fresh = fresh && fs::exists(ctx.layout.SplitManifest(ts.task, s));
    if (fresh && ReadJson(stamp).value("spec", json()) == spec) {
      ctx.Log("synth " + Name(ts.task) + ": up-to-date");
      continue;
    }
    SynthesizeCorpus(*ts.synth, dir);
    json j = ctx.config.Provenance();
    j["spec"] = spec;
    WriteJson(stamp, j);
    ctx.Log("synth " + Name(ts.task) + ": wrote " + std::to_string(ts.synth->num_train) + "/" +
            std::to_string(ts.synth->num_dev) + "/" + std::to_string(ts.synth->num_test) +
            " utterances");
  }
}

void RunSample(const StageContext &ctx) {
  for (const auto &ts : ctx.config.tasks) {
    if (!ctx.Wants(ts.task)) continue;
    const Manifest source = SourceManifest(ctx, ts.task, Split::kTrain);
    SampleResult r = ApplyPolicy(source, ts.sampling);
    const fs::path path = ctx.layout.SubsetManifest(ts.task);
    fs::create_directories(path.parent_path());
    Rebase(&r.subset, path.parent_path());
    json prov = r.provenance;
    prov["run"] = ctx.config.Provenance();
    r.subset.provenance = prov;
    SaveManifest(path, r.subset);
    ctx.Log("sample " + Name(ts.task) + ": " + std::to_string(r.subset.size()) + " of " +
            std::to_string(source.size()) + " utterances");
  }
}

void RunExtract(const StageContext &ctx) {
  const auto jobs = Jobs(ctx);
  ForEachJob(jobs.size(), ctx.jobs, [&](std::size_t i) {
    const ModelSpec &m = *jobs[i].model;
    const TaskKind task = jobs[i].task;
    if (m.caches.count(task)) {
      ctx.Log("extract " + m.name + "/" + Name(task) + ": using prebuilt cache");
      return;
    }
    const auto ex = Extractor(m, task);
    for (Split s : kSplits) {
      const Manifest manifest = LoadTaskManifest(ctx, task, s);
      const bool built = ExtractCache(ctx, *ex, task == TaskKind::kSid, manifest,
                                      ctx.layout.CacheDir(m.name, task, s));
      ctx.Log("extract " + m.name + "/" + Name(task) + "/" + std::string(SplitName(s)) + ": " +
              (built ? std::to_string(manifest.size()) + " records" : std::string("up-to-date")));
    }
  });

  // Storage accounting over the training sets.
  json rows = json::array();
  std::vector<std::string> tasks;
  for (const auto &ts : ctx.config.tasks) {
    if (!ctx.Wants(ts.task)) continue;
    tasks.push_back(Name(ts.task));
    const Manifest full = SourceManifest(ctx, ts.task, Split::kTrain);
    const Manifest mini = LoadTaskManifest(ctx, ts.task, Split::kTrain);
    auto wave_bytes = [](const Manifest &mf) {
      std::uint64_t n = 0;
      for (const auto &u : mf.utterances) n += fs::file_size(mf.Resolve(u.audio));
      return n;
    };
    rows.push_back({{"model", "waveform"}, {"task", Name(ts.task)}, {"pooled", false},
                    {"full_bytes", wave_bytes(full)}, {"mini_bytes", wave_bytes(mini)},
                    {"estimated_mini_bytes", wave_bytes(mini)}});
    for (const auto &m : ctx.config.models) {
      if (!ctx.Wants(m.name)) continue;
      const CacheReader reader(FeatureDir(ctx, m, ts.task, Split::kTrain));
      std::uint64_t measured = 0;
      for (const auto &u : mini.utterances) {
        const IndexEntry *e = reader.index().Find(u.id);
        if (!e) throw NotFoundError("cache of " + m.name + " lacks '" + u.id + "'");
        measured += e->length;
      }
      const FeatureRecord first = reader.Read(mini.utterances.front().id);
      const bool pooled = ts.task == TaskKind::kSid;
      const FrameRule rule = Framing(m, ts.task);
      const auto est_full = EstimateStorage(full, first.num_layers, first.dim, DType::kF32, pooled, rule);
      const auto est_mini = EstimateStorage(mini, first.num_layers, first.dim, DType::kF32, pooled, rule);
      rows.push_back({{"model", m.name}, {"task", Name(ts.task)}, {"pooled", pooled},
                      {"layers", first.num_layers}, {"dim", first.dim},
                      {"full_bytes", est_full.total()}, {"mini_bytes", measured},
                      {"estimated_mini_bytes", est_mini.total()},
                      {"header_bytes", est_mini.header_bytes}});
    }
  }
  json storage = ctx.config.Provenance();
  storage["tasks"] = tasks;
  storage["rows"] = rows;
  WriteJson(ctx.layout.File("storage.json"), storage);
  std::string tsv = ctx.config.TsvHeader() + "model\ttask\tpooled\tbytes\tfull_bytes\testimated_bytes\n";
  for (const auto &r : rows)
    tsv += r.at("model").get<std::string>() + "\t" + r.at("task").get<std::string>() + "\t" +
           (r.at("pooled").get<bool>() ? "1" : "0") + "\t" +
           std::to_string(r.at("mini_bytes").get<std::uint64_t>()) + "\t" +
           std::to_string(r.at("full_bytes").get<std::uint64_t>()) + "\t" +
           std::to_string(r.at("estimated_mini_bytes").get<std::uint64_t>()) + "\n";
  WriteText(ctx.layout.File("storage.tsv"), tsv);
  WriteText(ctx.layout.File("storage.txt"), RenderStorage(storage));
}

void RunTrain(const StageContext &ctx) {
  const auto jobs = Jobs(ctx);
  ForEachJob(jobs.size(), ctx.jobs, [&](std::size_t i) {
    const ModelSpec &m = *jobs[i].model;
    const TaskKind task = jobs[i].task;
    const LabelMaps labels = BuildLabels(ctx, task);
    const double cap = MaskCap(ctx, task);
    const TaskItems train = BuildItems(ctx, m, task, Split::kTrain, labels, cap);
    const TaskItems dev = BuildItems(ctx, m, task, Split::kDev, labels, cap);
    const ProbeConfig config = MakeProbeConfig(ctx, m, task, *train.examples.front().features, labels);
    TrainedProbe trained = TrainProbe(config, train.examples, [&](const Probe<float> &p) {
      return DevMetric(p, dev, labels);
    });
    const fs::path dir = ctx.layout.ProbeDir(m.name, task);
    fs::create_directories(dir);
    SaveProbe(dir / "probe.bin", trained.probe);
    WriteText(dir / "curve.tsv", ctx.config.TsvHeader() + CurveToTsv(trained.curve));
    json j = ctx.config.Provenance();
    j["model"] = m.name;
    j["task"] = Name(task);
    j["probe"] = config.ToJson();
    j["num_train"] = train.examples.size();
    j["num_dev"] = dev.examples.size();
    j["best_step"] = trained.best_step;
    j["best_dev_metric"] = trained.best_dev_metric ? json(*trained.best_dev_metric) : json();
    j["skipped_examples"] = trained.skipped_examples;
    j["num_params"] = trained.probe.NumParams();
    if (task == TaskKind::kAsr) j["vocabulary"] = labels.tokens;
    if (task == TaskKind::kSid) {
      std::vector<std::string> spk(labels.speakers.size());
      for (const auto &[name, id] : labels.speakers) spk[id] = name;
      j["speakers"] = spk;
    }
    WriteJson(dir / "train.json", j);
    ctx.Log("train " + m.name + "/" + Name(task) + ": best dev " +
            (trained.best_dev_metric ? Fixed(*trained.best_dev_metric, 4) : std::string("NA")) +
            " at step " + std::to_string(trained.best_step));
  });
}

void RunEval(const StageContext &ctx) {
  const auto jobs = Jobs(ctx);
  ForEachJob(jobs.size(), ctx.jobs, [&](std::size_t i) {
    const ModelSpec &m = *jobs[i].model;
    const TaskKind task = jobs[i].task;
    const fs::path probe_path = ctx.layout.ProbeDir(m.name, task) / "probe.bin";
    if (!fs::exists(probe_path))
      throw NotFoundError("probe " + probe_path.string() + " is missing; run the train stage");
    const Probe<float> probe = LoadProbe(probe_path);
    const LabelMaps labels = BuildLabels(ctx, task);
    const TaskItems test = BuildItems(ctx, m, task, Split::kTest, labels, probe.config().mask_cap);
    const fs::path dir = ctx.layout.EvalDir(m.name, task);
    fs::create_directories(dir);

    std::vector<UttResult> results;
    for (std::size_t k = 0; k < test.examples.size(); ++k)
      results.push_back(Evaluate(probe, test, k, labels));

    std::map<std::string, double> raw;
    std::string tsv = ctx.config.TsvHeader();
    const auto &utts = test.manifest.utterances;
    switch (task) {
      case TaskKind::kAsr: {
        double errors = 0.0, ref = 0.0;
        tsv += "utt_id\terrors\tref_length\thypothesis\n";
        for (std::size_t k = 0; k < results.size(); ++k) {
          errors += results[k].value;
          ref += static_cast<double>(results[k].ref_length);
          tsv += utts[k].id + "\t" + std::to_string(static_cast<long>(results[k].value)) + "\t" +
                 std::to_string(results[k].ref_length) + "\t" + results[k].hypothesis + "\n";
        }
        raw["wer"] = 100.0 * errors / std::max(1.0, ref);
        break;
      }
      case TaskKind::kSid: {
        double correct = 0.0;
        tsv += "utt_id\tspeaker\tpredicted\tcorrect\n";
        for (std::size_t k = 0; k < results.size(); ++k) {
          correct += results[k].value;
          tsv += utts[k].id + "\t" + *utts[k].speaker + "\t" + results[k].hypothesis + "\t" +
                 std::to_string(static_cast<int>(results[k].value)) + "\n";
        }
        raw["acc"] = 100.0 * correct / static_cast<double>(results.size());
        break;
      }
      case TaskKind::kSe: {
        std::vector<MetricItem> items;
        for (std::size_t k = 0; k < results.size(); ++k) {
          const fs::path est = dir / "wav" / (utts[k].id + ".wav");
          fs::create_directories(est.parent_path());
          WriteWav(est, WaveData{utts[k].sample_rate, QuantizePcm16(std::span<const double>(results[k].estimates[0]))});
          items.push_back({utts[k].id, test.manifest.Resolve(utts[k].refs.at("clean")), est});
        }
        const auto pesq = ExternalMetricScores(ctx.config.metrics.at("pesq"), items, 1);
        const auto stoi = ExternalMetricScores(ctx.config.metrics.at("stoi"), items, 1);
        double sp = 0.0, ss = 0.0, sd = 0.0;
        tsv += "utt_id\tpesq\tstoi\tsi_sdri\n";
        for (std::size_t k = 0; k < results.size(); ++k) {
          const double st = stoi[k] * ctx.config.stoi_report_scale;
          sp += pesq[k];
          ss += st;
          sd += results[k].value;
          tsv += utts[k].id + "\t" + Fixed(pesq[k]) + "\t" + Fixed(st) + "\t" + Fixed(results[k].value) + "\n";
        }
        const double n = static_cast<double>(results.size());
        raw["pesq"] = sp / n;
        raw["stoi"] = ss / n;
        raw["si_sdri"] = sd / n;
        break;
      }
      case TaskKind::kSs: {
        double sd = 0.0;
        tsv += "utt_id\tsi_sdri\n";
        for (std::size_t k = 0; k < results.size(); ++k) {
          sd += results[k].value;
          tsv += utts[k].id + "\t" + Fixed(results[k].value) + "\n";
        }
        raw["si_sdri"] = sd / static_cast<double>(results.size());
        break;
      }
    }
    WriteText(dir / "metrics.tsv", tsv);
    json j = ctx.config.Provenance();
    j["model"] = m.name;
    j["task"] = Name(task);
    j["num_utterances"] = results.size();
    j["raw"] = raw;
    j["single_metric"] = ToSingleMetric(task, raw, ctx.config.scoring);
    WriteJson(dir / "metrics.json", j);
    ctx.Log("eval " + m.name + "/" + Name(task) + ": " + Fixed(j["single_metric"].get<double>(), 4));
  });
}

Leaderboard RunScore(const StageContext &ctx) {
  ScoreMatrix matrix;
  for (const auto &ts : ctx.config.tasks) matrix.tasks.push_back(ts.task);
  for (const auto &m : ctx.config.models) {
    std::vector<double> scores;
    std::map<std::string, double> raw;
    for (const auto &ts : ctx.config.tasks) {
      const fs::path path = ctx.layout.EvalDir(m.name, ts.task) / "metrics.json";
      if (!fs::exists(path))
        throw NotFoundError("metrics " + path.string() + " are missing; run the eval stage");
      const json j = ReadJson(path);
      scores.push_back(j.at("single_metric").get<double>());
      for (const auto &[key, value] : j.at("raw").items())
        raw[Name(ts.task) + "." + key] = value.get<double>();
    }
    matrix.Add(m.name, scores, raw);
  }
  Leaderboard lb = BuildLeaderboard(matrix, ctx.config.scoring.baseline, ctx.config.reference_ranking);
  for (const auto &w : lb.warnings) ctx.Log("score: warning: " + w);

  json entries = json::array();
  for (const auto &e : lb.entries)
    entries.push_back({{"model", e.model},
                       {"task_scores", e.task_scores},
                       {"raw", e.raw},
                       {"score", e.score},
                       {"rank", e.rank},
                       {"rank_delta", e.rank_delta ? json(*e.rank_delta) : json()}});
  json j = ctx.config.Provenance();
  std::vector<std::string> tasks;
  for (TaskKind t : lb.tasks) tasks.push_back(Name(t));
  j["tasks"] = tasks;
  j["baseline"] = lb.baseline;
  j["sota"] = lb.sota;
  j["entries"] = entries;
  j["warnings"] = lb.warnings;
  j["spearman"] = lb.spearman ? json(*lb.spearman) : json();
  j["scoring"] = ctx.config.scoring.ToJson();
  WriteJson(ctx.layout.File("leaderboard.json"), j);
  WriteText(ctx.layout.File("leaderboard.tsv"), ctx.config.TsvHeader() + lb.ToTsv());
  WriteText(ctx.layout.File("leaderboard.txt"), lb.ToText());
  return lb;
}

CostReport RunCost(const StageContext &ctx) {
  if (!ctx.config.cost) throw ConfigError("the config has no \"cost\" section");
  const CostSettings &cs = *ctx.config.cost;
  CostReport report;
  for (const auto &ts : ctx.config.tasks) report.tasks.push_back(Name(ts.task));
  json details = json::array();
  for (const auto &m : ctx.config.models) {
    if (!m.arch) {
      ctx.Log("cost: model '" + m.name + "' has no arch; skipped");
      continue;
    }
    const double upstream = ForwardMacs(*m.arch, cs.upstream_schedule);
    std::map<std::string, double> full, mini;
    for (const auto &ts : ctx.config.tasks) {
      const fs::path path = ctx.layout.ProbeDir(m.name, ts.task) / "train.json";
      if (!fs::exists(path))
        throw NotFoundError("probe record " + path.string() + " is missing; run the train stage");
      const json tj = ReadJson(path);
      const ProbeConfig pc = ProbeConfig::FromJson(tj.at("probe"));
      ArchSpec probe_arch;
      std::vector<std::int64_t> frames = cs.downstream_schedule;
      if (pc.head == HeadKind::kLinearSid) {
        probe_arch.name = "linear_probe";
        probe_arch.layers.push_back(LinearSpec{pc.input_dim, pc.num_outputs});
        frames.assign(frames.size(), 1);  // pooled input
      } else {
        probe_arch = BlstmProbeArch(pc.input_dim, pc.hidden, pc.blstm_layers,
                                    static_cast<std::int64_t>(pc.num_outputs) *
                                        (pc.head == HeadKind::kBlstmMask ? pc.num_masks : 1));
      }
      CostInputs ci;
      ci.upstream_macs = upstream;
      ci.downstream_macs = ForwardMacs(probe_arch, frames);
      ci.backward_ratio = cs.backward_ratio;
      ci.steps_full = ts.steps_full;
      ci.steps_mini = pc.steps;
      const double batch = static_cast<double>(cs.upstream_schedule.size());
      ci.extraction_passes = std::ceil(tj.at("num_train").get<double>() / batch);
      full[Name(ts.task)] = CostFullBenchmark(ci);
      mini[Name(ts.task)] = CostMiniBenchmark(ci);
      details.push_back({{"model", m.name}, {"task", Name(ts.task)},
                         {"upstream_macs", ci.upstream_macs}, {"downstream_macs", ci.downstream_macs},
                         {"steps_full", ci.steps_full}, {"steps_mini", ci.steps_mini},
                         {"extraction_passes", ci.extraction_passes},
                         {"backward_ratio", ci.backward_ratio},
                         {"full", full[Name(ts.task)]}, {"mini", mini[Name(ts.task)]}});
    }
    report.AddRow(m.name, full, mini);
  }
  if (report.rows.empty()) throw ConfigError("no model has an \"arch\" for cost accounting");
  json j = ctx.config.Provenance();
  j["tasks"] = report.tasks;
  j["details"] = details;
  json rows = json::array();
  for (const auto &r : report.rows)
    rows.push_back({{"model", r.model}, {"full", r.full}, {"mini", r.mini},
                    {"total_full", r.total_full}, {"total_mini", r.total_mini},
                    {"reduction_pct", r.reduction_pct}});
  j["rows"] = rows;
  WriteJson(ctx.layout.File("cost.json"), j);
  WriteText(ctx.layout.File("cost.tsv"), ctx.config.TsvHeader() + report.ToTsv());
  WriteText(ctx.layout.File("cost.txt"), report.ToText());
  return report;
}

void RunAll(const StageContext &ctx) {
  fs::create_directories(ctx.layout.root);
  json manifest = ctx.config.Provenance();
  manifest["config"] = ctx.config.canonical;
  json seeds = json::object();
  for (const auto &ts : ctx.config.tasks) {
    seeds["synth/" + Name(ts.task)] = ts.synth ? json(ts.synth->seed) : json();
    seeds["sample/" + Name(ts.task)] = ts.sampling.seed;
    for (const auto &m : ctx.config.models)
      seeds["train/" + m.name + "/" + Name(ts.task)] =
          ctx.config.StageSeed("train", m.name + "/" + Name(ts.task));
  }
  manifest["seeds"] = seeds;
  WriteJson(ctx.layout.File("run.json"), manifest);

  auto stage = [&](const std::string &name, const std::function<void()> &fn) {
    ctx.Log("== " + name);
    try {
      fn();
    } catch (const std::exception &e) {
      json f = ctx.config.Provenance();
      f["stage"] = name;
      f["message"] = e.what();
      WriteJson(ctx.layout.File("failure.json"), f);
      throw StageError(name, e.what());
    }
  };
  stage("synth", [&] { RunSynth(ctx); });
  stage("sample", [&] { RunSample(ctx); });
  stage("extract", [&] { RunExtract(ctx); });
  stage("train", [&] { RunTrain(ctx); });
  stage("eval", [&] { RunEval(ctx); });
  stage("score", [&] { RunScore(ctx); });
  if (ctx.config.cost) stage("cost", [&] { RunCost(ctx); });
  stage("report", [&] { WriteText(ctx.layout.File("report.txt"), RenderReport(ctx.layout.root)); });
  fs::remove(ctx.layout.File("failure.json"));
}

}  // namespace minibench
