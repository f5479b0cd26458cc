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

#include "nels/classifier.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "nels/errors.h"

namespace nels {

namespace {

constexpr double kMinStddev = 1e-12;
constexpr int kMaxStepHalvings = 60;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_double(const std::string& tok, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') throw ParseError(line, "bad number '" + tok + "'");
  return v;
}

void write_vector(std::ostream& out, const char* key, std::span<const double> v) {
  out << key;
  for (double x : v) out << ' ' << hex(x);
  out << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::vector<std::string> expect(const std::string& key, std::string* rest = nullptr) {
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(line_ + 1, "unexpected end of model, wanted '" + key + "'");
    ++line_;
    std::istringstream ss(line);
    std::string k;
    ss >> k;
    if (k != key) throw ParseError(line_, "expected '" + key + "', found '" + k + "'");
    if (rest) {
      std::getline(ss >> std::ws, *rest);
      return {};
    }
    std::vector<std::string> toks;
    for (std::string t; ss >> t;) toks.push_back(t);
    return toks;
  }

  std::vector<double> doubles(const std::string& key, std::size_t n) {
    auto toks = expect(key);
    if (toks.size() != n)
      throw ParseError(line_, "'" + key + "' needs " + std::to_string(n) + " values, got " +
                                  std::to_string(toks.size()));
    std::vector<double> v;
    v.reserve(n);
    for (auto& t : toks) v.push_back(parse_double(t, line_));
    return v;
  }

  std::uint64_t count(const std::string& key) {
    const std::string tok = single(key);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size())
      throw ParseError(line_, "'" + key + "' needs a non-negative integer, got '" + tok + "'");
    return v;
  }

  double real(const std::string& key) {
    const std::string tok = single(key);
    return parse_double(tok, line_);
  }

  std::size_t line() const { return line_; }

 private:
  std::string single(const std::string& key) {
    auto toks = expect(key);
    if (toks.size() != 1) throw ParseError(line_, "'" + key + "' needs one value");
    return toks[0];
  }

 public:

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

}  // namespace

PooledFeatures pool_features(const FeatureMatrix& fm) {
  if (fm.frames == 0 || fm.mel_bands < 1) throw ContractViolation("cannot pool an empty feature matrix");
  if (fm.values.size() != std::size_t(fm.mel_bands) * fm.frames)
    throw ContractViolation("feature matrix size does not match its shape");
  const auto bands = std::size_t(fm.mel_bands);
  PooledFeatures out;
  out.values.assign(2 * bands, 0.0);
  const double n = double(fm.frames);
  for (std::size_t m = 0; m < bands; ++m) {
    double sum = 0.0;
    for (std::size_t t = 0; t < fm.frames; ++t) sum += fm.at(int(m), t);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t t = 0; t < fm.frames; ++t) {
      const double d = fm.at(int(m), t) - mean;
      ss += d * d;
    }
    out.values[m] = mean;
    out.values[bands + m] = std::sqrt(ss / n);
  }
  return out;
}

FeatureStats FeatureStats::fit(std::span<const PooledFeatures> data) {
  if (data.empty()) throw ContractViolation("cannot fit feature statistics on no data");
  const std::size_t dim = data.front().values.size();
  FeatureStats s;
  s.mean.assign(dim, 0.0);
  s.stddev.assign(dim, 0.0);
  for (const auto& x : data) {
    if (x.values.size() != dim) throw ContractViolation("pooled feature dimensions differ");
    for (std::size_t j = 0; j < dim; ++j) s.mean[j] += x.values[j];
  }
  for (auto& m : s.mean) m /= double(data.size());
  for (const auto& x : data)
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = x.values[j] - s.mean[j];
      s.stddev[j] += d * d;
    }
  for (auto& v : s.stddev) {
    v = std::sqrt(v / double(data.size()));
    if (v < kMinStddev) v = 1.0;
  }
  return s;
}

std::vector<double> FeatureStats::apply(const PooledFeatures& x) const {
  if (x.values.size() != mean.size())
    throw ContractViolation("feature dimension " + std::to_string(x.values.size()) +
                            " does not match model dimension " + std::to_string(mean.size()));
  std::vector<double> out(mean.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = (x.values[j] - mean[j]) / stddev[j];
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (auto& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : p) v /= sum;
  return p;
}

SoftmaxObjective::SoftmaxObjective(std::vector<double> design, std::vector<int> labels,
                                   std::size_t dim, std::size_t num_classes, double l2)
    : design_(std::move(design)), labels_(std::move(labels)), dim_(dim), classes_(num_classes), l2_(l2) {
  if (design_.size() != labels_.size() * dim_) throw ContractViolation("design matrix shape mismatch");
  for (int y : labels_)
    if (y < 0 || std::size_t(y) >= classes_) throw ContractViolation("label out of range");
}

double SoftmaxObjective::loss(std::span<const double> w, std::span<const double> b) const {
  double total = 0.0;
  std::vector<double> logits(classes_);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const double* x = &design_[i * dim_];
    for (std::size_t c = 0; c < classes_; ++c) {
      double z = b[c];
      const double* wc = &w[c * dim_];
      for (std::size_t j = 0; j < dim_; ++j) z += wc[j] * x[j];
      logits[c] = z;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    total += std::log(sum) + mx - logits[std::size_t(labels_[i])];
  }
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return total / double(labels_.size()) + 0.5 * l2_ * reg;
}

double SoftmaxObjective::loss_and_gradient(std::span<const double> w, std::span<const double> b,
                                           std::vector<double>& gw, std::vector<double>& gb) const {
  gw.assign(classes_ * dim_, 0.0);
  gb.assign(classes_, 0.0);
  const double inv_n = 1.0 / double(labels_.size());
  double total = 0.0;
  std::vector<double> logits(classes_);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const double* x = &design_[i * dim_];
    for (std::size_t c = 0; c < classes_; ++c) {
      double z = b[c];
      const double* wc = &w[c * dim_];
      for (std::size_t j = 0; j < dim_; ++j) z += wc[j] * x[j];
      logits[c] = z;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - mx);
    const auto y = std::size_t(labels_[i]);
    total += std::log(sum) + mx - logits[y];
    for (std::size_t c = 0; c < classes_; ++c) {
      const double r = (std::exp(logits[c] - mx) / sum - (c == y ? 1.0 : 0.0)) * inv_n;
      gb[c] += r;
      double* g = &gw[c * dim_];
      for (std::size_t j = 0; j < dim_; ++j) g[j] += r * x[j];
    }
  }
  double reg = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    reg += w[k] * w[k];
    gw[k] += l2_ * w[k];
  }
  return total * inv_n + 0.5 * l2_ * reg;
}

Model train(const std::vector<LabeledExample>& examples, const Vocabulary& classes,
            const TrainOptions& options) {
  if (examples.empty()) throw TrainingError("no training examples");
  if (options.epochs < 0 || options.learning_rate <= 0.0 || options.l2 < 0.0)
    throw ConfigError("invalid training options");
  const std::size_t V = classes.size();
  std::vector<bool> present(V, false);
  for (const auto& ex : examples) {
    if (ex.class_id < 0 || std::size_t(ex.class_id) >= V)
      throw ContractViolation("example class id outside the class list");
    present[std::size_t(ex.class_id)] = true;
  }
  if (std::count(present.begin(), present.end(), true) < 2)
    throw TrainingError("training needs examples from at least two classes");

  std::vector<PooledFeatures> raw;
  raw.reserve(examples.size());
  for (const auto& ex : examples) raw.push_back(ex.features);

  Model model;
  model.classes = classes;
  model.stats = FeatureStats::fit(raw);
  model.dim = model.stats.mean.size();
  const std::size_t D = model.dim;

  std::vector<double> design;
  design.reserve(examples.size() * D);
  std::vector<int> labels;
  labels.reserve(examples.size());
  for (const auto& ex : examples) {
    auto z = model.stats.apply(ex.features);
    design.insert(design.end(), z.begin(), z.end());
    labels.push_back(ex.class_id);
  }
  const SoftmaxObjective objective(std::move(design), std::move(labels), D, V, options.l2);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> init(0.0, options.init_scale);
  std::vector<double> w(V * D), b(V, 0.0);
  for (auto& v : w) v = options.init_scale > 0.0 ? init(rng) : 0.0;

  std::vector<double> gw, gb, w_next(w.size()), b_next(V);
  double current = objective.loss_and_gradient(w, b, gw, gb);
  model.meta.loss_history.reserve(std::size_t(options.epochs));
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    double step = options.learning_rate;
    bool moved = false;
    for (int attempt = 0; attempt <= kMaxStepHalvings; ++attempt, step *= 0.5) {
      for (std::size_t k = 0; k < w.size(); ++k) w_next[k] = w[k] - step * gw[k];
      for (std::size_t c = 0; c < V; ++c) b_next[c] = b[c] - step * gb[c];
      const double candidate = objective.loss(w_next, b_next);
      if (candidate <= current) {
        w.swap(w_next);
        b.swap(b_next);
        current = objective.loss_and_gradient(w, b, gw, gb);
        moved = true;
        break;
      }
    }
    model.meta.loss_history.push_back(current);
    if (!moved) {
      // Converged to within floating-point resolution; the rest of the
      // history is flat.
      model.meta.loss_history.resize(std::size_t(options.epochs), current);
      break;
    }
  }

  model.weights = std::move(w);
  model.bias = std::move(b);
  model.meta.seed = options.seed;
  model.meta.epochs = options.epochs;
  model.meta.learning_rate = options.learning_rate;
  model.meta.l2 = options.l2;
  return model;
}

Prediction predict_pooled(const Model& model, const PooledFeatures& features) {
  const std::size_t V = model.num_classes();
  if (V == 0 || model.weights.size() != V * model.dim || model.bias.size() != V)
    throw ContractViolation("model is not trained");
  const auto z = model.stats.apply(features);
  std::vector<double> logits(V);
  for (std::size_t c = 0; c < V; ++c) {
    double s = model.bias[c];
    const double* wc = &model.weights[c * model.dim];
    for (std::size_t j = 0; j < model.dim; ++j) s += wc[j] * z[j];
    logits[c] = s;
  }
  Prediction p;
  p.scores = softmax(logits);
  const auto best = std::max_element(p.scores.begin(), p.scores.end());
  p.confidence = *best;
  p.argmax_class = model.classes.at(static_cast<int>(best - p.scores.begin()));
  return p;
}

Prediction predict(const Model& model, const FeatureMatrix& fm) {
  return predict_pooled(model, pool_features(fm));
}

DominantSound dominant_sound(const Vocabulary& classes, std::vector<Prediction> per_segment) {
  if (per_segment.empty()) throw InvalidInputError("dominant sound needs at least one segment");
  const std::size_t V = classes.size();
  DominantSound out;
  out.score_sums.assign(V, 0.0);
  for (const auto& p : per_segment) {
    if (p.scores.size() != V) throw ContractViolation("prediction size does not match class list");
    for (std::size_t c = 0; c < V; ++c) out.score_sums[c] += p.scores[c];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < V; ++c) {
    const double s = out.score_sums[c];
    if (s > out.score_sums[best] ||
        (s == out.score_sums[best] && classes.at(int(c)).label < classes.at(int(best)).label))
      best = c;
  }
  out.dominant = classes.at(int(best));
  out.per_segment = std::move(per_segment);
  return out;
}

DominantSound dominant_sound(const Model& model, const std::vector<FeatureMatrix>& segments) {
  if (segments.empty()) throw InvalidInputError("dominant sound needs at least one segment");
  std::vector<Prediction> preds;
  preds.reserve(segments.size());
  for (const auto& fm : segments) preds.push_back(predict(model, fm));
  return dominant_sound(model.classes, std::move(preds));
}

void write_model(std::ostream& out, const Model& m) {
  out << "NELSMODEL1\n";
  out << "kind " << m.kind << '\n';
  out << "dim " << m.dim << '\n';
  out << "classes " << m.classes.size() << '\n';
  for (const auto& c : m.classes.classes()) out << "class " << dataset_name(c.dataset) << ' ' << c.label << '\n';
  write_vector(out, "mean", m.stats.mean);
  write_vector(out, "stddev", m.stats.stddev);
  for (std::size_t c = 0; c < m.classes.size(); ++c)
    write_vector(out, "w", std::span(m.weights).subspan(c * m.dim, m.dim));
  write_vector(out, "bias", m.bias);
  out << "seed " << m.meta.seed << '\n';
  out << "epochs " << m.meta.epochs << '\n';
  out << "learning_rate " << hex(m.meta.learning_rate) << '\n';
  out << "l2 " << hex(m.meta.l2) << '\n';
  out << "loss_history " << m.meta.loss_history.size() << '\n';
  write_vector(out, "losses", m.meta.loss_history);
  out << "end\n";
}

Model read_model(std::istream& in) {
  std::string magic;
  if (!std::getline(in, magic) || magic != "NELSMODEL1") throw ParseError(1, "missing NELSMODEL1 magic");
  LineReader r(in);
  // Line numbers below are relative to the magic line.
  Model m;
  std::string kind;
  r.expect("kind", &kind);
  if (kind != kSoftmaxRegressionKind) throw ParseError(2, "unsupported model kind '" + kind + "'");
  m.kind = kind;
  m.dim = r.count("dim");
  const std::size_t V = r.count("classes");
  for (std::size_t c = 0; c < V; ++c) {
    std::string rest;
    r.expect("class", &rest);
    const auto sp = rest.find(' ');
    if (sp == std::string::npos) throw ParseError(r.line() + 1, "class line needs dataset and label");
    auto ds = parse_dataset(rest.substr(0, sp));
    if (!ds) throw ParseError(r.line() + 1, "unknown dataset in class line");
    m.classes.add(rest.substr(sp + 1), *ds);
  }
  m.stats.mean = r.doubles("mean", m.dim);
  m.stats.stddev = r.doubles("stddev", m.dim);
  m.weights.reserve(V * m.dim);
  for (std::size_t c = 0; c < V; ++c) {
    auto row = r.doubles("w", m.dim);
    m.weights.insert(m.weights.end(), row.begin(), row.end());
  }
  m.bias = r.doubles("bias", V);
  m.meta.seed = r.count("seed");
  const auto epochs = r.count("epochs");
  if (epochs > std::uint64_t(std::numeric_limits<int>::max())) throw ParseError(r.line(), "epochs out of range");
  m.meta.epochs = int(epochs);
  m.meta.learning_rate = r.real("learning_rate");
  m.meta.l2 = r.real("l2");
  const std::size_t n_loss = r.count("loss_history");
  m.meta.loss_history = r.doubles("losses", n_loss);
  r.expect("end");
  return m;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw StorageError("cannot write model: " + path.string());
  write_model(out, model);
  if (!out) throw StorageError("short write: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model: " + path.string());
  return read_model(in);
}

}  // namespace nels
