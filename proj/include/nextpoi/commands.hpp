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
#include <iosfwd>
#include <string>
#include <vector>

#include "nextpoi/config.hpp"
#include "nextpoi/data.hpp"
#include "nextpoi/eval.hpp"
#include "nextpoi/model.hpp"
#include "nextpoi/train.hpp"

namespace nextpoi {

// Bundle layout written by preprocess under RunConfig::dir.
inline constexpr const char* kBundleCheckins = "checkins.tsv";
inline constexpr const char* kBundlePois = "pois.tsv";
inline constexpr const char* kBundleUserMeta = "user_meta.tsv";
inline constexpr const char* kBundleVocab = "vocab.tsv";
inline constexpr const char* kBundleSplit = "split.tsv";
inline constexpr const char* kBundleStats = "stats.tsv";
inline constexpr const char* kHeldoutCheckins = "heldout_checkins.tsv";
inline constexpr const char* kHeldoutUserMeta = "heldout_user_meta.tsv";
inline constexpr const char* kPoiEmbeddings = "poi_embeddings.txt";
inline constexpr const char* kUserEmbeddings = "user_embeddings.txt";
inline constexpr const char* kWalks = "walks.txt";
inline constexpr const char* kHistory = "history.tsv";

struct DatasetStats {
  std::size_t users = 0;
  std::size_t pois = 0;
  std::size_t checkins = 0;
  double avg_checkins = 0.0;
  double avg_user_items = 0.0;
  double avg_poi_words = 0.0;
};

DatasetStats dataset_stats(const Dataset& data);

// Reads the canonical bundle from cfg.dir.
Dataset load_bundle(const RunConfig& cfg);

// Builds an untrained model over the dataset vocabulary: random tensors, with
// Q and U taken from the pre-trained tables when cfg.pretrained is set.
Model initial_model(const RunConfig& cfg, const Dataset& data);

DatasetStats cmd_preprocess(const RunConfig& cfg, std::ostream& log);
void cmd_pretrain(const RunConfig& cfg, std::ostream& log);
TrainResult cmd_train(const RunConfig& cfg, std::ostream& log);
EvalReport cmd_evaluate(const RunConfig& cfg, std::ostream& log);

struct RecommendRequest {
  std::string user;
  std::string prev_poi;
  std::int64_t prev_time = 0;
  std::int64_t time = 0;
  std::size_t k = 10;
  bool cold_user = false;
  std::vector<std::string> meta_items;
};

// Writes "rank<TAB>poi_id<TAB>score" lines to `out`.
std::vector<Recommendation> cmd_recommend(const RunConfig& cfg, const RecommendRequest& req,
                                          std::ostream& out, std::ostream& log);

void cmd_interpret(const RunConfig& cfg, std::ostream& log);

}  // namespace nextpoi
