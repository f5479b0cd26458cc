// Copyright (c) 2026 The NELS Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nels/self_training.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "nels/errors.h"

namespace nels {

namespace {

// Gains smaller than this are treated as no improvement.
constexpr double kImprovementEpsilon = 1e-12;

TrainOptions options_of(const Model& m) {
  TrainOptions o;
  o.seed = m.meta.seed;
  o.epochs = m.meta.epochs;
  o.learning_rate = m.meta.learning_rate;
  o.l2 = m.meta.l2;
  return o;
}

void require_disjoint(const std::vector<LabeledExample>& base, const std::vector<LabeledExample>& eval) {
  std::set<std::vector<double>> seen;
  for (const auto& ex : base) seen.insert(ex.features.values);
  for (const auto& ex : eval)
    if (seen.contains(ex.features.values))
      throw ContractViolation("evaluation split overlaps the base training set");
}

}  // namespace

void SelfTrainConfig::validate() const {
  if (!(confidence_threshold > 0.0 && confidence_threshold < 1.0))
    throw ConfigError("confidence threshold must be in (0, 1)");
  if (max_rounds < 0) throw ConfigError("max_rounds must be non-negative");
  if (plateau_patience < 1) throw ConfigError("plateau_patience must be at least 1");
}

EvalMetrics evaluate_precision(const Model& model, const std::vector<LabeledExample>& eval) {
  const std::size_t V = model.num_classes();
  std::vector<std::size_t> predicted(V, 0), correct(V, 0);
  std::size_t total_correct = 0;
  for (const auto& ex : eval) {
    const auto p = predict_pooled(model, ex.features);
    const auto c = std::size_t(p.argmax_class.class_id);
    ++predicted[c];
    if (p.argmax_class.class_id == ex.class_id) {
      ++correct[c];
      ++total_correct;
    }
  }
  EvalMetrics m;
  m.per_class_precision.resize(V);
  for (std::size_t c = 0; c < V; ++c)
    m.per_class_precision[c] = predicted[c] ? double(correct[c]) / double(predicted[c])
                                            : std::numeric_limits<double>::quiet_NaN();
  m.overall_precision = eval.empty() ? 0.0 : double(total_correct) / double(eval.size());
  return m;
}

RoundResult self_train_round(const Model& model, const std::vector<PooledFeatures>& unlabeled,
                             const SelfTrainConfig& config, const std::vector<LabeledExample>& base,
                             const std::vector<LabeledExample>& eval) {
  config.validate();
  require_disjoint(base, eval);

  std::vector<LabeledExample> augmented = base;
  std::size_t pseudo = 0;
  for (const auto& x : unlabeled) {
    const auto p = predict_pooled(model, x);
    if (p.confidence >= config.confidence_threshold) {
      augmented.push_back({x, p.argmax_class.class_id});
      ++pseudo;
    }
  }

  RoundResult out{train(augmented, model.classes, options_of(model)), {}};
  out.report.pseudo_labeled = pseudo;
  out.report.augmented_size = augmented.size();
  out.report.before = evaluate_precision(model, eval);
  out.report.after = evaluate_precision(out.model, eval);
  return out;
}

SelfTrainingRun run_self_training(const Model& initial, const SelfTrainConfig& config,
                                  const std::vector<LabeledExample>& base,
                                  const std::vector<PooledFeatures>& pool,
                                  const std::vector<LabeledExample>& eval) {
  config.validate();
  SelfTrainingRun run{initial, {}};
  double best = evaluate_precision(initial, eval).overall_precision;
  int stale = 0;
  for (int r = 0; r < config.max_rounds; ++r) {
    auto result = self_train_round(run.model, pool, config, base, eval);
    result.report.round = r + 1;
    const double before = result.report.before.overall_precision;
    const double after = result.report.after.overall_precision;
    result.report.accepted = after >= before;
    if (result.report.accepted) run.model = std::move(result.model);
    if (result.report.accepted && after > best + kImprovementEpsilon) {
      best = after;
      stale = 0;
    } else {
      ++stale;
    }
    run.rounds.push_back(std::move(result.report));
    if (stale >= config.plateau_patience) break;
  }
  return run;
}

SelfTrainingRun run_self_training(const SelfTrainConfig& config, const Vocabulary& classes,
                                  const std::vector<LabeledExample>& base,
                                  const std::vector<PooledFeatures>& pool,
                                  const std::vector<LabeledExample>& eval, const TrainOptions& options) {
  config.validate();
  return run_self_training(train(base, classes, options), config, base, pool, eval);
}

}  // namespace nels
