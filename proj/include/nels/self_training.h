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

#pragma once

#include <cstddef>
#include <vector>

#include "nels/classifier.h"

namespace nels {

struct SelfTrainConfig {
  double confidence_threshold = 0.85;  // tau, exclusive range (0, 1)
  int max_rounds = 5;
  int plateau_patience = 3;

  void validate() const;
};

// Precision of a model on a labelled evaluation split.
struct EvalMetrics {
  // Per model class: correct / predicted; NaN when the class is never predicted.
  std::vector<double> per_class_precision;
  // Micro-averaged over all evaluation items.
  double overall_precision = 0.0;
};

EvalMetrics evaluate_precision(const Model& model, const std::vector<LabeledExample>& eval);

struct RoundReport {
  int round = 0;
  std::size_t pseudo_labeled = 0;
  std::size_t augmented_size = 0;
  EvalMetrics before;
  EvalMetrics after;
  bool accepted = false;
};

struct RoundResult {
  Model model;
  RoundReport report;
};

// Pseudo-labels every pool item whose confidence under `model` is at least
// tau with its argmax class, then retrains from scratch on base plus the
// pseudo-labelled items using the model's own seed and hyperparameters.
// The report carries precision before and after; acceptance is the
// caller's decision (report.accepted is left false).
RoundResult self_train_round(const Model& model, const std::vector<PooledFeatures>& unlabeled,
                             const SelfTrainConfig& config, const std::vector<LabeledExample>& base,
                             const std::vector<LabeledExample>& eval);

struct SelfTrainingRun {
  Model model;  // last accepted model (the initial one if none was accepted)
  std::vector<RoundReport> rounds;
};

// Repeats self_train_round, accepting a round iff overall evaluation
// precision does not decrease. Stops after max_rounds or after
// plateau_patience consecutive rounds that fail to beat the best precision
// so far. Every round is reported, rejected ones included.
SelfTrainingRun run_self_training(const Model& initial, const SelfTrainConfig& config,
                                  const std::vector<LabeledExample>& base,
                                  const std::vector<PooledFeatures>& pool,
                                  const std::vector<LabeledExample>& eval);

// Trains the baseline on `base` first.
SelfTrainingRun run_self_training(const SelfTrainConfig& config, const Vocabulary& classes,
                                  const std::vector<LabeledExample>& base,
                                  const std::vector<PooledFeatures>& pool,
                                  const std::vector<LabeledExample>& eval,
                                  const TrainOptions& options = {});

}  // namespace nels
