// Copyright 2026 The nextpoi Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nextpoi/data.hpp"
#include "nextpoi/model.hpp"

namespace nextpoi::testing {

// Raw records ready for build_dataset or for writing as input files.
struct Corpus {
  std::vector<RawCheckIn> checkins;
  std::vector<RawPoi> pois;
  std::vector<RawUser> users;
};

struct CorpusSpec {
  int pois = 30;
  int users = 50;
  int length = 40;         // check-ins per user
  double dominant = 1.0;   // probability of following the planted edge
  int words = 5;           // POI meta vocabulary
  int user_items = 4;      // user meta vocabulary
  std::uint64_t seed = 7;
};

// First-order Markov chain over a seeded random permutation. With dominant < 1
// the planted successor is replaced by a uniform other POI.
Corpus planted_markov(const CorpusSpec& spec);

// Next POI depends on the hour of the target visit: hours [0, 12) follow one
// planted map into the first half of the POIs, hours [12, 24) another map into
// the second half.
Corpus two_regime(const CorpusSpec& spec);

// The planted successor of every POI, indexed by dense id.
std::vector<int> planted_successors(const CorpusSpec& spec);

std::string poi_name(int i);
std::string user_name(int i);

Dataset to_dataset(const Corpus& corpus);

// checkins.tsv, pois.tsv and user_meta.tsv under dir.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

struct ToySpec {
  int users = 10;
  int pois = 20;
  int poi_words = 5;
  int user_items = 4;
  int dim = 8;
  double scale = 0.5;
  std::uint64_t seed = 1;
};

// Random model with named vocabularies; every POI and user gets one to three
// meta items, except the last POI and user, which get none.
Model toy_model(const ToySpec& spec);

// Fresh empty directory below the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace nextpoi::testing
