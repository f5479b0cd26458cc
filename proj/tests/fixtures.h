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

// A small trained world shared by pipeline, service and acceptance tests:
// a synthetic corpus on disk, a model trained on it and matching word
// vectors. Built once per process.

#include <memory>

#include "nels/classifier.h"
#include "nels/dataset.h"
#include "nels/synthetic.h"
#include "test_util.h"

namespace testutil {

struct SynthWorld {
  TempDir dir{"nels-world"};
  nels::SyntheticCorpus corpus;
  nels::Model model;
  std::filesystem::path corpus_dir;
  std::filesystem::path embeddings;
};

inline const SynthWorld& synth_world() {
  static const std::unique_ptr<SynthWorld> world = [] {
    auto w = std::make_unique<SynthWorld>();
    w->corpus_dir = w->dir / "corpus";
    nels::SynthOptions opts;
    opts.clips_per_class = 8;
    w->corpus = nels::write_synthetic_corpus(w->corpus_dir, nels::default_synth_classes(), opts);
    nels::TrainOptions train;
    train.epochs = 300;
    w->model = nels::train(nels::load_examples(w->corpus.rows, w->corpus.classes), w->corpus.classes, train);
    w->embeddings = w->dir / "embeddings.txt";
    nels::write_synthetic_embeddings(w->embeddings);
    return w;
  }();
  return *world;
}

}  // namespace testutil
