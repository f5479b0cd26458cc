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

#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "nels/csv.h"
#include "nels/dataset.h"
#include "nels/errors.h"
#include "nels/vocabulary.h"
#include "../test_util.h"

using namespace nels;

TEST_CASE("shipped class lists have their dataset sizes") {
  CHECK(esc50_labels().size() == 50);
  CHECK(us8k_labels().size() == 10);
  CHECK(tut16_labels().size() == 18);
  CHECK(dataset_class_count(Dataset::kAudioSet) == 527);
  CHECK(kFullVocabularySize == 50 + 10 + 18 + 527);
}

TEST_CASE("builtin vocabulary has unique labels and dense ids") {
  const auto v = builtin_vocabulary();
  CHECK(v.size() == 78);
  std::set<std::string> labels;
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(v.classes()[i].class_id == int(i));
    labels.insert(v.classes()[i].label);
  }
  CHECK(labels.size() == v.size());
  CHECK(v.contains("air conditioner"));
  // "siren" is in both ESC-50 and UrbanSound8K.
  CHECK(v.contains("siren"));
  CHECK(v.contains("siren (US8K)"));
}

TEST_CASE("full vocabulary with an AudioSet label file has 605 classes") {
  testutil::TempDir dir;
  {
    std::ofstream out(dir / "as.csv");
    out << "index,mid,display_name\n";
    for (int i = 0; i < 527; ++i) out << i << ",/m/x" << i << ",\"Sound, kind " << i << "\"\n";
  }
  const auto labels = load_audioset_labels(dir / "as.csv");
  REQUIRE(labels.size() == 527);
  CHECK(labels[3] == "Sound, kind 3");
  CHECK(builtin_vocabulary(dir / "as.csv").size() == kFullVocabularySize);
}

TEST_CASE("label collisions are qualified, exact repeats rejected") {
  Vocabulary v;
  CHECK(v.add("dog", Dataset::kEsc50) == 0);
  CHECK(v.add("dog", Dataset::kAudioSet) == 1);
  CHECK(v.at(1).label == "dog (AUDIOSET)");
  CHECK_THROWS_AS(v.add("dog", Dataset::kAudioSet), InvalidLabelError);
  CHECK_THROWS_AS(v.add("  ", Dataset::kEsc50), InvalidLabelError);
  CHECK_THROWS_AS(v.at(7), NotFoundError);
}

TEST_CASE("subset reindexes densely") {
  Vocabulary v;
  for (auto l : {"a", "b", "c", "d"}) v.add(l, Dataset::kCustom);
  const auto s = v.subset({"d", "b"});
  REQUIRE(s.size() == 2);
  CHECK(s.at(0).label == "d");
  CHECK(s.at(1).class_id == 1);
  CHECK_THROWS_AS(v.subset({"zzz"}), InvalidLabelError);
}

TEST_CASE("vocabulary csv round trip") {
  testutil::TempDir dir;
  const auto v = builtin_vocabulary();
  save_vocabulary_csv(v, dir / "v.csv");
  CHECK(load_vocabulary_csv(dir / "v.csv") == v);
}

TEST_CASE("csv reader handles quoting and reports lines") {
  std::istringstream in("a,b\r\n\"x, y\",\"he said \"\"hi\"\"\"\n\"multi\nline\",z\n");
  csv::Reader r(in);
  CHECK(*r.next() == std::vector<std::string>{"a", "b"});
  CHECK(*r.next() == std::vector<std::string>{"x, y", "he said \"hi\""});
  CHECK(r.line() == 2);
  CHECK(*r.next() == std::vector<std::string>{"multi\nline", "z"});
  CHECK(r.line() == 3);
  CHECK_FALSE(r.next());
  CHECK(csv::join({"a,b", "c\"d", "e"}) == "\"a,b\",\"c\"\"d\",e");

  std::istringstream bad("\"open");
  csv::Reader rb(bad);
  CHECK_THROWS_AS(rb.next(), ParseError);
}

TEST_CASE("manifest parsing") {
  testutil::TempDir dir;
  {
    std::ofstream out(dir / "m.csv");
    out << "path,label,dataset,fold\nclips/a.wav,dog,ESC50,1\n/abs/b.wav,siren,US8K,2\n";
  }
  const auto rows = read_manifest(dir / "m.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].path == dir.path() / "clips/a.wav");
  CHECK(rows[1].path == "/abs/b.wav");
  CHECK(rows[1].dataset == Dataset::kUs8k);

  const auto classes = manifest_classes(rows);
  CHECK(classes.size() == 2);
  Vocabulary only_dog;
  only_dog.add("dog", Dataset::kEsc50);
  CHECK_THROWS_AS(manifest_classes(rows, &only_dog), ManifestError);

  {
    std::ofstream out(dir / "bad.csv");
    out << "file,label\nx,y\n";
  }
  CHECK_THROWS_AS(read_manifest(dir / "bad.csv"), ManifestError);
  {
    std::ofstream out(dir / "bad2.csv");
    out << "path,label,dataset,fold\nx,y,NOPE,1\n";
  }
  CHECK_THROWS_AS(read_manifest(dir / "bad2.csv"), ManifestError);
}
