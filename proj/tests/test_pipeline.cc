// tests/test_pipeline.cc

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

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <mutex>

#include "doctest.h"
#include "minibench/common.h"
#include "minibench/pipeline.h"
#include "minibench/rng.h"
#include "oracles.h"

using namespace minibench;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json TinyConfig() {
  const json probe = {{"hidden", 4}, {"blstm_layers", 1}, {"steps", 6}, {"batch_size", 2},
                      {"log_every", 3}, {"eval_every", 3}, {"optimizer", {{"lr", 0.01}}}};
  const json synth = {{"num_train", 8}, {"num_dev", 2}, {"num_test", 3}, {"num_speakers", 2},
                      {"min_samples", 4000}, {"max_samples", 5000}};
  json asr_synth = synth;
  asr_synth["vocab_size"] = 3;
  const json strat = {{"type", "stratified_fraction"}, {"edges", {0, 5, 10, 15, 20, 25}},
                      {"fraction", 0.5}};
  return {
      {"name", "tiny"},
      {"seed", 5},
      {"tasks",
       {{"ASR", {{"synth", asr_synth}, {"sampling", {{"type", "global_fraction"}, {"fraction", 0.5}}},
                 {"probe", probe}, {"steps_full", 1000}}},
        {"SID", {{"synth", synth}, {"sampling", {{"type", "per_speaker"}, {"count", 2}}},
                 {"probe", probe}, {"steps_full", 1000}}},
        {"SE", {{"synth", synth}, {"sampling", strat}, {"probe", probe}, {"steps_full", 1000}}},
        {"SS", {{"synth", synth}, {"sampling", strat}, {"probe", probe}, {"steps_full", 1000}}}}},
      {"models",
       {{{"name", "FBANK"}, {"extractor", {{"type", "fbank"}, {"n_mels", 4}}},
         {"arch", {{"layers", {{{"type", "linear"}, {"in", 1}, {"out", 4}}}}}}},
        {{"name", "stack"},
         {"extractor", {{"type", "context_stack"}, {"n_mels", 8}, {"layers", 2}, {"context", 1}}},
         {"arch", {{"layers", {{{"type", "linear"}, {"in", 1}, {"out", 8}}}}}}},
        {{"name", "noise"}, {"extractor", {{"type", "noise"}, {"layers", 2}, {"dim", 8}}}}}},
      {"scoring", {{"baseline", "FBANK"}}},
      {"reference_ranking", {"stack", "FBANK", "noise"}},
      {"cost", {{"upstream_schedule", {16000, 16000}}, {"downstream_schedule", {100, 100}}}}};
}

struct Captured {
  std::mutex mu;
  std::vector<std::string> lines;
  bool Contains(const std::string &s) {
    std::lock_guard<std::mutex> lock(mu);
    for (const auto &l : lines)
      if (l.find(s) != std::string::npos) return true;
    return false;
  }
};

StageContext Context(const json &cfg, const fs::path &root, Captured *log, int jobs = 2) {
  StageContext ctx;
  ctx.config = RunConfig::FromJson(cfg, root.parent_path());
  ctx.layout.root = root;
  ctx.jobs = jobs;
  ctx.log = [log](const std::string &m) {
    std::lock_guard<std::mutex> lock(log->mu);
    log->lines.push_back(m);
  };
  return ctx;
}

void ExpectConfigError(const json &cfg, const std::string &fragment) {
  try {
    RunConfig::FromJson(cfg, fs::temp_directory_path());
    FAIL("accepted: " << fragment);
  } catch (const ConfigError &e) {
    CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
  }
}

int Cli(const std::string &args) {
  const std::string cmd = std::string(MINIBENCH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::uint64_t FileBytes(const fs::path &dir) {
  return fs::exists(dir / "features.msb") ? fs::file_size(dir / "features.msb") : 0;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config validation") {
  json c = TinyConfig();
  CHECK_NOTHROW(RunConfig::FromJson(c, "."));
  c["tasks"]["XX"] = c["tasks"]["ASR"];
  ExpectConfigError(c, "unknown task");
  c = TinyConfig();
  c["models"].push_back(c["models"][0]);
  ExpectConfigError(c, "duplicate model");
  c = TinyConfig();
  c["scoring"]["baseline"] = "mel";
  ExpectConfigError(c, "baseline");
  c = TinyConfig();
  c["reference_ranking"] = {"stack", "FBANK"};
  ExpectConfigError(c, "reference ranking");
  c = TinyConfig();
  c["tasks"]["SE"].erase("synth");
  ExpectConfigError(c, "SE needs");
  c = TinyConfig();
  c["tasks"]["SE"].erase("synth");
  c["tasks"]["SE"]["manifests"] = {{"train", "no/such.jsonl"}, {"dev", "x"}, {"test", "y"}};
  ExpectConfigError(c, "not found");
  c = TinyConfig();
  c["models"][2]["extractor"]["type"] = "mystery";
  ExpectConfigError(c, "mystery");
  c = TinyConfig();
  c["tasks"]["ASR"]["probe"]["hidden"] = "wide";
  ExpectConfigError(c, "config");
  c = TinyConfig();
  c["cost"]["upstream_schedule"] = json::array();
  ExpectConfigError(c, "schedules");
  CHECK_THROWS_AS(RunConfig::Load("/no/such/config.json"), ConfigError);
}

TEST_CASE("config hash and seeds") {
  const RunConfig a = RunConfig::FromJson(TinyConfig(), ".");
  json reordered = json::parse(TinyConfig().dump());
  const RunConfig b = RunConfig::FromJson(reordered, ".");
  CHECK(a.Hash() == b.Hash());
  const RunConfig c = RunConfig::FromJson(TinyConfig(), ".", 6);
  CHECK(c.seed == 6);
  CHECK(c.Hash() != a.Hash());
  CHECK(c.StageSeed("train", "x") != a.StageSeed("train", "x"));
  CHECK(a.StageSeed("train", "x") == Rng::Derive(5, "train/x"));
  CHECK(a.Provenance()["seed"] == 5);
  CHECK(a.Provenance()["config_hash"] == HexDigest(a.Hash()));
  CHECK(a.TsvHeader() == "# minibench " + std::string(kVersion) + " config=" +
                             HexDigest(a.Hash()) + " seed=5\n");
  CHECK(a.Task(TaskKind::kSe).sampling.kind == SamplingPolicy::Kind::kStratifiedFraction);
  CHECK(a.Model("noise").extractor["type"] == "noise");
}

TEST_CASE("small run produces every artifact and reruns are incremental") {
  mbtest::TempDir dir("pipeline");
  Captured log;
  const StageContext ctx = Context(TinyConfig(), dir / "run", &log);
  RunAll(ctx);
  for (const char *f : {"run.json", "leaderboard.json", "leaderboard.tsv", "leaderboard.txt",
                        "cost.json", "cost.tsv", "cost.txt", "storage.json", "storage.tsv",
                        "report.txt"})
    CHECK_MESSAGE(fs::exists(dir / "run" / f), f);
  CHECK_FALSE(fs::exists(dir / "run" / "failure.json"));

  const json lb = json::parse(ReadFileBytes(dir / "run" / "leaderboard.json"));
  CHECK(lb["entries"].size() == 3);
  CHECK(lb["config_hash"] == HexDigest(ctx.config.Hash()));
  CHECK(ReadFileBytes(dir / "run" / "leaderboard.tsv").rfind(ctx.config.TsvHeader(), 0) == 0);
  for (const auto &e : lb["entries"])
    if (e["model"] == "FBANK") CHECK(e["score"] == 0.0);

  // Storage: mini bytes are what the train caches hold; the waveform row is
  // the audio of the subset.
  const json storage = json::parse(ReadFileBytes(dir / "run" / "storage.json"));
  int checked = 0;
  for (const auto &r : storage["rows"]) {
    if (r["model"] == "waveform") continue;
    const TaskKind t = ParseTaskKind(r["task"].get<std::string>());
    CHECK(r["mini_bytes"] == FileBytes(ctx.layout.CacheDir(r["model"], t, Split::kTrain)));
    CHECK(r["mini_bytes"] == r["estimated_mini_bytes"]);
    CHECK(r["pooled"] == (t == TaskKind::kSid));
    ++checked;
  }
  CHECK(checked == 12);

  // Cost rows exist only for models with an architecture.
  const json cost = json::parse(ReadFileBytes(dir / "run" / "cost.json"));
  CHECK(cost["rows"].size() == 2);
  for (const auto &r : cost["rows"]) CHECK(r["total_mini"].get<double>() < r["total_full"].get<double>());

  const std::string subset = ReadFileBytes(ctx.layout.SubsetManifest(TaskKind::kSe));
  const fs::path cache = ctx.layout.CacheDir("stack", TaskKind::kSe, Split::kTrain);
  const auto stamp = fs::last_write_time(cache / "features.msb");
  log.lines.clear();
  RunExtract(ctx);
  CHECK(log.Contains("stack/SE/train: up-to-date"));
  CHECK(fs::last_write_time(cache / "features.msb") == stamp);
  RunSample(ctx);
  CHECK(ReadFileBytes(ctx.layout.SubsetManifest(TaskKind::kSe)) == subset);

  // A single-job rerun into a fresh directory gives identical artifacts.
  Captured log2;
  RunAll(Context(TinyConfig(), dir / "again", &log2, 1));
  for (const char *f : {"leaderboard.json", "cost.json", "storage.json", "report.txt"})
    CHECK_MESSAGE(ReadFileBytes(dir / "run" / f) == ReadFileBytes(dir / "again" / f), f);
}

TEST_CASE("stage filters and missing inputs") {
  mbtest::TempDir dir("filters");
  Captured log;
  StageContext ctx = Context(TinyConfig(), dir / "run", &log);
  ctx.only_models = {"noise"};
  ctx.only_tasks = {TaskKind::kSid};
  CHECK(ctx.Wants("noise"));
  CHECK_FALSE(ctx.Wants("FBANK"));
  CHECK_FALSE(ctx.Wants(TaskKind::kAsr));
  RunSynth(ctx);
  RunSample(ctx);
  RunExtract(ctx);
  CHECK(fs::exists(ctx.layout.CacheDir("noise", TaskKind::kSid, Split::kTest) / "index.jsonl"));
  CHECK_FALSE(fs::exists(ctx.layout.CacheDir("FBANK", TaskKind::kSid, Split::kTest)));
  CHECK_THROWS_AS(RunScore(ctx), NotFoundError);
}

TEST_CASE("a failing stage is recorded") {
  mbtest::TempDir dir("failure");
  Captured log;
  json cfg = TinyConfig();
  // Corpus from a synth run, then one utterance pointed at absent audio.
  const StageContext synth = Context(cfg, dir / "src", &log);
  RunSynth(synth);
  Manifest train = LoadManifest(synth.layout.SplitManifest(TaskKind::kAsr, Split::kTrain));
  train.utterances[0].audio = "audio/missing.wav";
  SaveManifest(synth.layout.SplitManifest(TaskKind::kAsr, Split::kTrain), train);
  cfg["tasks"] = {{"ASR", cfg["tasks"]["ASR"]}};
  cfg["tasks"]["ASR"].erase("synth");
  cfg["tasks"]["ASR"]["sampling"] = {{"type", "identity"}};
  cfg["tasks"]["ASR"]["manifests"] = {
      {"train", fs::relative(synth.layout.SplitManifest(TaskKind::kAsr, Split::kTrain), dir.path())},
      {"dev", fs::relative(synth.layout.SplitManifest(TaskKind::kAsr, Split::kDev), dir.path())},
      {"test", fs::relative(synth.layout.SplitManifest(TaskKind::kAsr, Split::kTest), dir.path())}};
  const StageContext ctx = Context(cfg, dir / "run", &log);
  try {
    RunAll(ctx);
    FAIL("run succeeded");
  } catch (const StageError &e) {
    CHECK(e.stage == "extract");
  }
  const json f = json::parse(ReadFileBytes(dir / "run" / "failure.json"));
  CHECK(f["stage"] == "extract");
  CHECK(f["seed"] == 5);
}

}  // TEST_SUITE

TEST_SUITE("report") {

TEST_CASE("golden report") {
  const fs::path run = mbtest::TestDataDir() / "report_run";
  CHECK(RenderReport(run) == ReadFileBytes(mbtest::TestDataDir() / "report_run.expected"));
}

TEST_CASE("absent sections are marked") {
  mbtest::TempDir dir("report");
  CHECK_THROWS_AS(RenderReport(dir.path()), NotFoundError);
  fs::copy_file(mbtest::TestDataDir() / "report_run" / "storage.json", dir / "storage.json");
  const std::string text = RenderReport(dir.path());
  CHECK(text.find("Leaderboard\n===========\n(absent: score stage not run)") != std::string::npos);
  CHECK(text.find("(absent: cost stage not run)") != std::string::npos);
  CHECK(text.find("waveform") != std::string::npos);
  std::ofstream(dir / "leaderboard.json") << "{\"spearman\": null, \"entries\": []}";
  CHECK(RenderReport(dir.path()).find("(no reference ranking configured)") != std::string::npos);
  std::ofstream(dir / "leaderboard.json") << "{broken";
  CHECK_THROWS_AS(RenderReport(dir.path()), FormatError);
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
  mbtest::TempDir dir("cli");
  CHECK(Cli("--help") == 0);
  CHECK(Cli("") == 2);
  CHECK(Cli("run --no-such-flag") == 2);
  CHECK(Cli("run --config " + (dir / "absent.json").string()) == 2);
  std::ofstream(dir / "bad.json") << "{\"tasks\": 3}";
  CHECK(Cli("run -q --config " + (dir / "bad.json").string()) == 2);
  CHECK(Cli("report " + (dir / "empty").string()) == 3);
  CHECK(Cli("report " + (mbtest::TestDataDir() / "report_run").string()) == 0);

  json cfg = TinyConfig();
  cfg["tasks"] = {{"SID", cfg["tasks"]["SID"]}};
  std::ofstream(dir / "tiny.json") << cfg.dump();
  const std::string base = "-q --config " + (dir / "tiny.json").string() + " --out " + (dir / "run").string();
  CHECK(Cli("synth " + base) == 0);
  CHECK(Cli("score " + base) == 3);
  CHECK(Cli("run " + base + " --jobs 2") == 0);
  CHECK(fs::exists(dir / "run" / "report.txt"));
}

TEST_CASE("standalone sampling") {
  mbtest::TempDir dir("cli-sample");
  std::string text;
  for (int i = 0; i < 6; ++i)
    text += "{\"id\":\"u" + std::to_string(i) + "\",\"audio\":\"a.wav\",\"n\":100,\"speaker\":\"s" +
            std::to_string(i % 2) + "\"}\n";
  std::ofstream(dir / "m.jsonl") << text;
  const std::string out = (dir / "sub.jsonl").string();
  CHECK(Cli("sample --manifest " + (dir / "m.jsonl").string() +
            " --policy '{\"type\":\"per_speaker\",\"count\":2,\"seed\":3}' --task SID -o " + out) == 0);
  const Manifest sub = LoadManifest(out);
  CHECK(sub.size() == 4);
  CHECK(sub.provenance["policy"]["type"] == "per_speaker");
  CHECK(Cli("sample --manifest " + (dir / "m.jsonl").string() + " --policy '{\"type\":\"x\"}'") == 2);
  CHECK(Cli("sample --manifest " + (dir / "m.jsonl").string() +
            " --policy '{\"type\":\"identity\"}' --task ASR") == 2);
}

}  // TEST_SUITE
