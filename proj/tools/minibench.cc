// minibench.cc

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

// Command line driver.  Exit status: 0 success, 2 configuration error,
// 3 stage failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "minibench/pipeline.h"

namespace {

using namespace minibench;

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  int jobs = 1;
  bool quiet = false;
  std::vector<std::string> models;
  std::vector<std::string> tasks;
};

StageContext MakeContext(const Globals &g) {
  if (g.config.empty()) throw ConfigError("--config is required");
  StageContext ctx{RunConfig::Load(g.config, g.seed), RunLayout{g.out}, g.jobs, g.models, {}, {}};
  for (const auto &t : g.tasks) {
    try {
      ctx.only_tasks.push_back(ParseTaskKind(t));
    } catch (const Error &) {
      throw ConfigError("unknown task '" + t + "'");
    }
  }
  for (const auto &m : g.models) ctx.config.Model(m);
  if (g.jobs < 1) throw ConfigError("--jobs must be >= 1");
  if (!g.quiet) ctx.log = [](const std::string &msg) { std::cerr << msg << "\n"; };
  return ctx;
}

// Runs one stage, mapping its failures to exit codes.
int Guard(const std::string &stage, const std::function<void()> &fn) {
  try {
    fn();
    return 0;
  } catch (const ConfigError &e) {
    std::cerr << "minibench: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const StageError &e) {
    std::cerr << "minibench: stage '" << e.stage << "' failed: " << e.what() << "\n";
    return kExitStage;
  } catch (const std::exception &e) {
    std::cerr << "minibench: stage '" << stage << "' failed: " << e.what() << "\n";
    return kExitStage;
  }
}

int Sample(const Globals &g, const std::string &manifest, const std::string &policy,
           const std::string &task, const std::string &out) {
  if (manifest.empty()) {
    return Guard("sample", [&] { RunSample(MakeContext(g)); });
  }
  SamplingPolicy p;
  Manifest source;
  try {
    auto j = nlohmann::json::parse(policy);
    if (g.seed) j["seed"] = *g.seed;
    p = SamplingPolicy::FromJson(j);
    std::optional<TaskKind> kind;
    if (!task.empty()) kind = ParseTaskKind(task);
    source = LoadManifest(manifest, kind);
  } catch (const std::exception &e) {
    std::cerr << "minibench: config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return Guard("sample", [&] {
    SampleResult r = ApplyPolicy(source, p);
    if (out == "-") {
      std::cout << SerializeManifest(r.subset);
    } else {
      r.subset.base_dir = source.base_dir;
      SaveManifest(out, r.subset);
    }
    std::cerr << "sample: " << r.subset.size() << " of " << source.size() << " utterances\n";
  });
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Reduced-cost benchmark harness for layer-wise speech representations"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--seed", g.seed, "Override the configured global seed");
  app.add_option("--out", g.out, "Run directory")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Parallel (model, task) jobs")->capture_default_str();
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress messages");

  auto filters = [&](CLI::App *sub) {
    sub->add_option("--model", g.models, "Restrict to these models");
    sub->add_option("--task", g.tasks, "Restrict to these tasks");
  };

  int status = 0;
  auto stage = [&](const char *name, const char *help, std::function<void(const StageContext &)> fn) {
    CLI::App *sub = app.add_subcommand(name, help);
    filters(sub);
    sub->callback([&, name, fn] { status = Guard(name, [&] { fn(MakeContext(g)); }); });
  };
  stage("synth", "Generate the synthetic corpora", RunSynth);
  stage("extract", "Extract feature caches and the storage report", RunExtract);
  stage("train", "Train the downstream probes", RunTrain);
  stage("eval", "Evaluate trained probes on the test sets", RunEval);
  stage("score", "Build the leaderboard", [](const StageContext &c) {
    std::cout << RunScore(c).ToText();
  });
  stage("cost", "Training-cost report", [](const StageContext &c) {
    std::cout << RunCost(c).ToText();
  });
  stage("run", "Run every stage", [](const StageContext &c) {
    RunAll(c);
    std::cout << ReadFileBytes(c.layout.File("report.txt"));
  });

  std::string manifest, policy = R"({"type": "identity"})", task, sample_out = "-";
  CLI::App *sample = app.add_subcommand(
      "sample", "Draw training subsets; with --manifest, subsample one manifest");
  sample->add_option("--manifest", manifest, "Source manifest (standalone mode)");
  sample->add_option("--policy", policy, "Sampling policy JSON (standalone mode)");
  sample->add_option("--task", task, "Validate the manifest for this task");
  sample->add_option("-o,--output", sample_out, "Subset manifest path, '-' for stdout");
  sample->callback([&] { status = Sample(g, manifest, policy, task, sample_out); });

  std::string run_dir;
  CLI::App *report = app.add_subcommand("report", "Summarize a run directory");
  report->add_option("run_dir", run_dir, "Run directory (default: --out)");
  report->callback([&] {
    status = Guard("report", [&] {
      std::cout << RenderReport(run_dir.empty() ? g.out : run_dir);
    });
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  return status;
}
