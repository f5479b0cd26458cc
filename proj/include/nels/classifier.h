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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nels/features.h"
#include "nels/vocabulary.h"

namespace nels {

inline constexpr std::size_t kPooledDim = 2 * kMelBands;
inline constexpr const char* kSoftmaxRegressionKind = "softmax-regression";

// Per-band mean (first half) and population standard deviation (second
// half) over frames. Not standardized; models do that with stored stats.
struct PooledFeatures {
  std::vector<double> values;
};

PooledFeatures pool_features(const FeatureMatrix& fm);

// Per-dimension standardization fitted on a training set. Dimensions with
// (near) zero spread are left unscaled.
struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> stddev;

  static FeatureStats fit(std::span<const PooledFeatures> data);
  std::vector<double> apply(const PooledFeatures& x) const;

  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

struct LabeledExample {
  PooledFeatures features;
  int class_id = -1;
};

struct TrainOptions {
  std::uint64_t seed = 7;
  int epochs = 500;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  double init_scale = 0.01;
};

struct TrainMeta {
  std::uint64_t seed = 0;
  int epochs = 0;
  double learning_rate = 0.0;
  double l2 = 0.0;
  std::vector<double> loss_history;  // loss after each epoch

  friend bool operator==(const TrainMeta&, const TrainMeta&) = default;
};

// Multinomial logistic regression over standardized pooled features.
struct Model {
  std::string kind = kSoftmaxRegressionKind;
  Vocabulary classes;
  FeatureStats stats;
  std::size_t dim = kPooledDim;
  std::vector<double> weights;  // V x dim, row-major
  std::vector<double> bias;     // V
  TrainMeta meta;

  std::size_t num_classes() const { return classes.size(); }

  friend bool operator==(const Model&, const Model&) = default;
};

struct Prediction {
  std::vector<double> scores;  // one probability per model class
  SoundClass argmax_class;
  double confidence = 0.0;
};

// Numerically stable softmax (max subtracted).
std::vector<double> softmax(std::span<const double> logits);

// Mean cross-entropy plus (l2 / 2) * |W|^2 over a standardized design
// matrix. Bias is not regularized.
class SoftmaxObjective {
 public:
  SoftmaxObjective(std::vector<double> design, std::vector<int> labels, std::size_t dim,
                   std::size_t num_classes, double l2);

  double loss(std::span<const double> weights, std::span<const double> bias) const;
  double loss_and_gradient(std::span<const double> weights, std::span<const double> bias,
                           std::vector<double>& grad_weights, std::vector<double>& grad_bias) const;

  std::size_t rows() const { return labels_.size(); }

 private:
  std::vector<double> design_;  // rows() x dim_
  std::vector<int> labels_;
  std::size_t dim_;
  std::size_t classes_;
  double l2_;
};

// Full-batch gradient descent from a seeded small random start. A step that
// would raise the loss is halved until it does not, so the recorded loss
// history never increases. Throws TrainingError when fewer than two classes
// have examples and ContractViolation on malformed examples.
Model train(const std::vector<LabeledExample>& examples, const Vocabulary& classes,
            const TrainOptions& options = {});

Prediction predict_pooled(const Model& model, const PooledFeatures& features);
Prediction predict(const Model& model, const FeatureMatrix& fm);

struct DominantSound {
  SoundClass dominant;
  std::vector<double> score_sums;
  std::vector<Prediction> per_segment;
};

// Class with the largest summed score across segments; exact ties go to
// the lexicographically smaller label. Throws InvalidInputError when empty.
DominantSound dominant_sound(const Model& model, const std::vector<FeatureMatrix>& segments);
DominantSound dominant_sound(const Vocabulary& classes, std::vector<Prediction> per_segment);

// Text serialization starting with "NELSMODEL1". Doubles are written as
// hex floats so a round trip is exact.
void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace nels
