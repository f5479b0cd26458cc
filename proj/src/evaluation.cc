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

#include "nels/evaluation.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "nels/csv.h"
#include "nels/errors.h"

namespace nels {

namespace {

PrecisionReport score(const std::vector<IndexEntry>& top, const SoundClass& cls, std::size_t k,
                      Reference reference) {
  PrecisionReport r;
  r.sound_class = cls;
  r.k = k;
  r.reference = reference;
  for (const auto& e : top) {
    if (reference == Reference::kQuery) {
      ++r.judged;
      if (e.crawl_label == cls.label) ++r.correct;
    } else if (auto verdict = human_judgment(e)) {
      ++r.judged;
      if (*verdict) ++r.correct;
    }
  }
  if (r.judged > 0) r.precision = double(r.correct) / double(r.judged);
  return r;
}

std::string number(const std::optional<double>& v) {
  if (!v) return {};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

}  // namespace

std::optional<bool> human_judgment(const IndexEntry& e) {
  if (e.correct_votes == 0 && e.incorrect_votes == 0) return std::nullopt;
  return e.correct_votes > e.incorrect_votes;
}

PrecisionReport precision_at_k(const ContentIndex& index, const SoundClass& cls, std::size_t k,
                               Reference reference) {
  if (k == 0) throw InvalidInputError("k must be at least 1");
  return score(index.query_by_class_topk(cls.label, k), cls, k, reference);
}

DivergenceReport compare_references(const ContentIndex& index, const std::vector<SoundClass>& classes,
                                    std::size_t k) {
  if (k == 0) throw InvalidInputError("k must be at least 1");
  DivergenceReport out;
  out.k = k;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& cls : classes) {
    // One retrieval feeds both references so they see the same segments.
    const auto top = index.query_by_class_topk(cls.label, k);
    const auto human = score(top, cls, k, Reference::kHuman);
    const auto query = score(top, cls, k, Reference::kQuery);
    ClassDivergence d{cls, human.judged, human.precision, query.precision, std::nullopt};
    if (d.p_human && d.p_query) {
      d.delta = std::fabs(*d.p_human - *d.p_query);
      sum += *d.delta;
      ++n;
    } else {
      out.undefined_classes.push_back(cls.label);
    }
    out.per_class.push_back(std::move(d));
  }
  if (n > 0) out.mean_abs_delta = sum / double(n);
  return out;
}

void write_divergence_csv(std::ostream& out, const DivergenceReport& report) {
  out << "class,k,p_human,judged,p_query,delta\n";
  for (const auto& d : report.per_class) {
    out << csv::join({d.sound_class.label, std::to_string(report.k), number(d.p_human),
                      std::to_string(d.judged), number(d.p_query), number(d.delta)})
        << '\n';
  }
}

void write_divergence_csv(const std::filesystem::path& path, const DivergenceReport& report) {
  std::ofstream out(path);
  if (!out) throw StorageError("cannot write report: " + path.string());
  write_divergence_csv(out, report);
  if (!out) throw StorageError("write failed: " + path.string());
}

}  // namespace nels
