// probes/trainer.cc

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

#include "minibench/probes/trainer.h"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "minibench/probes/ctc.h"
#include "minibench/rng.h"

namespace minibench {

namespace {

std::string Describe(int step, double lr, double grad_norm) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "non-finite loss at step %d (lr %g, grad norm %g)", step, lr,
                grad_norm);
  return buf;
}

std::string FormatReal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

TrainingError::TrainingError(int s, double l, double g)
    : Error(Describe(s, l, g)), step(s), lr(l), grad_norm(g) {}

TrainedProbe TrainProbe(const ProbeConfig &config, const std::vector<ProbeExample> &train,
                        const DevMetricFn &dev) {
  config.Validate();
  TrainedProbe out{Probe<float>(config), {}, std::nullopt, 0, 0, config.seed};
  Probe<float> probe(config);
  probe.Init(config.seed);

  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (config.head == HeadKind::kBlstmCtc &&
        static_cast<std::size_t>(train[i].features->num_frames) < CtcMinFrames(train[i].tokens)) {
      ++out.skipped_examples;
      continue;
    }
    usable.push_back(i);
  }
  if (usable.empty() && config.steps > 0) throw InvalidArgument("no usable training examples");

  Optimizer<float> opt(config.optimizer);
  Rng order_rng(Rng::Derive(config.seed, "batches"));
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  auto next_example = [&]() {
    if (cursor == order.size()) {
      order = usable;
      order_rng.Shuffle(&order);
      cursor = 0;
    }
    return order[cursor++];
  };

  const auto params = probe.Params();
  double loss_sum = 0.0;
  int loss_count = 0;
  auto evaluate = [&](int step, CurvePoint *point) {
    if (!dev) return;
    const double metric = dev(probe);
    point->dev_metric = metric;
    if (!out.best_dev_metric || metric > *out.best_dev_metric) {
      out.best_dev_metric = metric;
      out.best_step = step;
      out.probe.CopyFrom(probe);
    }
  };

  for (int step = 1; step <= config.steps; ++step) {
    probe.ZeroGrad();
    const int batch = config.batch_size;
    double batch_loss = 0.0;
    for (int b = 0; b < batch; ++b)
      batch_loss += probe.Loss(train[next_example()], true, 1.0 / batch);
    batch_loss /= batch;
    if (!std::isfinite(batch_loss))
      throw TrainingError(step, config.optimizer.lr, GradNorm(params));
    opt.Step(params);
    loss_sum += batch_loss;
    ++loss_count;

    const bool log_now = step % config.log_every == 0 || step == config.steps;
    const bool eval_now = step % config.eval_every == 0 || step == config.steps;
    if (log_now || eval_now) {
      CurvePoint point;
      point.step = step;
      point.loss = loss_count ? loss_sum / loss_count : 0.0;
      if (eval_now) evaluate(step, &point);
      out.curve.push_back(point);
      loss_sum = 0.0;
      loss_count = 0;
    }
  }
  if (!out.best_dev_metric) {
    if (dev) evaluate(config.steps, &out.curve.emplace_back(CurvePoint{config.steps, 0.0, {}}));
    else out.probe.CopyFrom(probe);
    out.best_step = config.steps;
  }
  return out;
}

std::string CurveToTsv(const std::vector<CurvePoint> &curve) {
  std::string out = "step\tloss\tdev_metric\n";
  for (const auto &p : curve) {
    out += std::to_string(p.step) + "\t" + FormatReal(p.loss) + "\t" +
           (p.dev_metric ? FormatReal(*p.dev_metric) : std::string("NA")) + "\n";
  }
  return out;
}

}  // namespace minibench
