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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nextpoi/common.hpp"

namespace nextpoi {

inline constexpr int kTimeSlots = 24;

struct FeatureFlags {
  bool use_meta = true;
  bool use_interval = true;  // W(t) interpolation instead of a single W1
  bool use_timeslot = true;  // hour-of-day bias instead of a single b1

  friend bool operator==(const FeatureFlags&, const FeatureFlags&) = default;
};

struct Hyperparams {
  int dim = 60;
  double alpha = 0.3;  // POI embedding vs. POI meta-data mix
  double beta = 0.2;   // user embedding vs. user meta-data mix
  double interval_hours = 6.0;
  double lambda = 0.01;
  double learning_rate = 0.005;
  FeatureFlags flags;
  std::int64_t tz_offset_seconds = 0;

  void validate() const;
};

// Meta-data membership: poi_items[q] and user_items[u] hold dense ids into
// the POI-side and user-side meta embedding tables respectively.
struct MetaSets {
  std::vector<std::vector<int>> poi_items;
  std::vector<std::vector<int>> user_items;
};

struct Vocabulary {
  std::vector<std::string> users;
  std::vector<std::string> pois;
  std::vector<std::string> poi_words;
  std::vector<std::string> user_items;

  std::optional<int> find_user(std::string_view id) const;
  std::optional<int> find_poi(std::string_view id) const;
  std::optional<int> find_poi_word(std::string_view id) const;
  std::optional<int> find_user_item(std::string_view id) const;
};

// Every tensor is always allocated; the feature flags decide which ones take
// part in the forward pass (w1/b1 only when the interval/slot paths are off).
struct Parameters {
  EmbeddingTable users;
  EmbeddingTable pois;
  EmbeddingTable user_meta;
  EmbeddingTable poi_meta;
  Matrix w0;
  Matrix w_pi;
  Matrix w1;
  Matrix w2;
  Matrix w3;
  Vector b1;
  Vector b2;
  Vector b3;
  Matrix slot_bias;  // kTimeSlots x dim

  bool all_finite() const;
};

struct Model {
  Hyperparams hp;
  Parameters params;
  MetaSets meta;
  Vocabulary vocab;

  Index poi_count() const { return params.pois.size(); }
  Index user_count() const { return params.users.size(); }
};

struct ModelShape {
  Index users = 0;
  Index pois = 0;
  Index user_items = 0;
  Index poi_words = 0;
  int dim = 0;
};

// All tensors uniform in [-scale, scale].
Parameters random_parameters(const ModelShape& shape, std::uint64_t seed, double scale = 0.08);

// A user-side query is either a trained user, a cold user described only by
// meta items (hu from beta = 0), or no user at all (POI intent alone).
struct UserQuery {
  enum class Kind { kTrained, kMetaOnly, kNone };
  Kind kind = Kind::kTrained;
  int user = -1;
  std::vector<int> meta_items;

  static UserQuery trained(int u) { return {Kind::kTrained, u, {}}; }
  static UserQuery meta_only(std::vector<int> items) { return {Kind::kMetaOnly, -1, std::move(items)}; }
  static UserQuery none() { return {Kind::kNone, -1, {}}; }
};

struct QueryContext {
  UserQuery user;
  int prev_poi = 0;
  std::int64_t prev_time = 0;
  std::int64_t time = 0;
};

inline Vector relu(const Vector& x) { return x.cwiseMax(0.0); }

// Mean of the listed rows; zero vector for an empty list.
Vector meta_embed(std::span<const int> items, const EmbeddingTable& table);
Vector meta_embed_poi(int poi, const Model& model);
Vector meta_embed_user(int user, const Model& model);

// ((pi - t)/pi) W0 + (t/pi) Wpi for t < pi, Wpi beyond.
Matrix interval_matrix(double hours, const Matrix& w0, const Matrix& w_pi, double pi);

double interval_hours(std::int64_t prev_time, std::int64_t time);

// Weight pair (a0, a1) with W(t) = a0 W0 + a1 Wpi.
std::pair<double, double> interval_weights(double hours, double pi);

// alpha q + (1 - alpha) m_q, or q alone with meta-data off.
Vector poi_input(int poi, const Model& model);

Vector poi_intent(const QueryContext& ctx, const Model& model);
Vector user_intent(int user, const Model& model);
Vector user_intent_from_meta(std::span<const int> items, const Model& model);
Vector candidate_intent(int poi, const Model& model);

// Row l is candidate_intent(l); one batched product over the whole vocabulary.
Matrix candidate_intents(const Model& model);

// hu + hq for the query; hu is omitted for UserQuery::none().
Vector query_intent(const QueryContext& ctx, const Model& model);

double score(const Vector& h_u, const Vector& h_q, const Vector& c);

Vector scores(const QueryContext& ctx, const Model& model);
Vector scores(const Vector& intent, const Matrix& candidates);

// Max-subtracted softmax.
Vector softmax(const Vector& scores);

Vector predict_distribution(const QueryContext& ctx, const Model& model);

struct Recommendation {
  int poi;
  double score;
};

// Descending score, ties by ascending dense id.
std::vector<Recommendation> top_k(const Vector& scores, std::size_t k);
std::vector<Recommendation> recommend_topk(const QueryContext& ctx, const Model& model,
                                           std::size_t k);

// 1-based position of `target` under the ordering top_k uses.
std::int64_t rank_of(const Vector& scores, int target);

}  // namespace nextpoi
