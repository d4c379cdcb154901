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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nextpoi/common.hpp"
#include "nextpoi/data.hpp"
#include "nextpoi/model.hpp"
#include "nextpoi/train.hpp"

namespace nextpoi {

// Fraction of instances whose 1-based rank is at most k.
double acc_at_k(std::span<const std::int64_t> ranks, std::int64_t k);

// With one relevant POI per instance, average precision is 1 / rank, so MAP
// is the mean reciprocal rank.
double mean_average_precision(std::span<const std::int64_t> ranks);

struct EvalRecord {
  std::string user;  // original id
  int prev_poi = 0;
  int target = 0;
  std::int64_t time = 0;
  std::int64_t rank = 0;
};

struct EvalReport {
  double acc1 = 0.0;
  double acc5 = 0.0;
  double acc10 = 0.0;
  double map = 0.0;
  std::vector<EvalRecord> records;
  std::size_t skipped = 0;  // cold-start users without a qualifying transition

  std::size_t count() const { return records.size(); }
  std::vector<std::int64_t> ranks() const;
};

EvalReport summarize(std::vector<EvalRecord> records, std::size_t skipped = 0);

// Scores over the whole POI vocabulary for one query.
using ScoreFn = std::function<Vector(const TrainInstance&)>;

EvalReport evaluate_instances(const std::vector<TrainInstance>& instances,
                              const std::vector<std::string>& user_ids, const ScoreFn& score_fn,
                              int threads = 1);

EvalReport evaluate(const Model& model, const Dataset& data, const Split& split, Segment segment,
                    int threads = 1);

// MAP alone, for the validation hook of the trainer.
double validation_map(const Model& model, const std::vector<TrainInstance>& instances,
                      int threads = 1);

// A user excluded from training. `visits` uses dense POI ids of the model,
// with -1 for POIs outside its vocabulary; meta items are model user-item ids.
struct ColdUser {
  std::string id;
  std::vector<int> meta_items;
  std::vector<std::pair<int, std::int64_t>> visits;  // (poi, timestamp), chronological
};

// Builds ColdUser records from raw check-ins and user meta-data, mapped onto
// the model vocabulary. Unknown meta items are dropped and counted.
std::vector<ColdUser> make_cold_users(std::span<const RawCheckIn> checkins,
                                      std::span<const RawUser> meta, const Vocabulary& vocab,
                                      std::size_t* dropped_items = nullptr);

// For each sampled held-out user, one seeded random consecutive transition
// (q_i, q_j) with both POIs in the vocabulary; hu comes from the user's meta
// items at beta = 0, or is omitted when the user has none.
EvalReport cold_start_eval(const Model& model, std::span<const ColdUser> users,
                           std::uint64_t seed, std::size_t max_users = 200);

// relu(W3 m_w + b3) for a POI meta word.
Vector word_contribution(int word, const Model& model);

struct KeywordScore {
  int word = 0;
  double score = 0.0;
};

// Words by descending kappa_i(w) = omega_w(i) / sum_j omega_w(j), ties by
// word id; words whose contribution vector is all zero are left out.
std::vector<KeywordScore> dimension_keywords(int dimension, std::size_t top_n, const Model& model);

}  // namespace nextpoi
