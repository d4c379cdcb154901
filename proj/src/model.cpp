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

#include "nextpoi/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nextpoi/data.hpp"

namespace nextpoi {
namespace {

std::optional<int> find_in(const std::vector<std::string>& sorted, std::string_view id) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), id);
  if (it == sorted.end() || *it != id) return std::nullopt;
  return static_cast<int>(it - sorted.begin());
}

template <class Derived>
void fill_uniform(Eigen::DenseBase<Derived>& m, std::mt19937_64& rng, double scale) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = uniform(rng, -scale, scale);
  }
}

void check_poi(int poi, const Model& model) {
  if (poi < 0 || poi >= model.poi_count()) {
    throw DataError("unknown POI id " + std::to_string(poi) +
                    " (cold-start POIs are not supported)");
  }
}

}  // namespace

void Hyperparams::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(interval_hours > 0.0)) throw ConfigError("interval threshold must be > 0 hours");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
}

std::optional<int> Vocabulary::find_user(std::string_view id) const { return find_in(users, id); }
std::optional<int> Vocabulary::find_poi(std::string_view id) const { return find_in(pois, id); }
std::optional<int> Vocabulary::find_poi_word(std::string_view id) const {
  return find_in(poi_words, id);
}
std::optional<int> Vocabulary::find_user_item(std::string_view id) const {
  return find_in(user_items, id);
}

bool Parameters::all_finite() const {
  return users.all_finite() && pois.all_finite() && user_meta.all_finite() &&
         poi_meta.all_finite() && w0.allFinite() && w_pi.allFinite() && w1.allFinite() &&
         w2.allFinite() && w3.allFinite() && b1.allFinite() && b2.allFinite() &&
         b3.allFinite() && slot_bias.allFinite();
}

Parameters random_parameters(const ModelShape& shape, std::uint64_t seed, double scale) {
  const Index d = shape.dim;
  Parameters p;
  p.users = EmbeddingTable(shape.users, d);
  p.pois = EmbeddingTable(shape.pois, d);
  p.user_meta = EmbeddingTable(shape.user_items, d);
  p.poi_meta = EmbeddingTable(shape.poi_words, d);
  p.w0 = Matrix(d, d);
  p.w_pi = Matrix(d, d);
  p.w1 = Matrix(d, d);
  p.w2 = Matrix(d, d);
  p.w3 = Matrix(d, d);
  p.b1 = Vector(d);
  p.b2 = Vector(d);
  p.b3 = Vector(d);
  p.slot_bias = Matrix(kTimeSlots, d);

  std::uint64_t tensor = 0;
  auto next = [&]() { return std::mt19937_64(derive_seed(seed, 0x9a4, tensor++)); };
  auto fill = [&](auto& m) {
    auto rng = next();
    fill_uniform(m, rng, scale);
  };
  fill(p.users.values);
  fill(p.pois.values);
  fill(p.user_meta.values);
  fill(p.poi_meta.values);
  fill(p.w0);
  fill(p.w_pi);
  fill(p.w1);
  fill(p.w2);
  fill(p.w3);
  fill(p.b1);
  fill(p.b2);
  fill(p.b3);
  fill(p.slot_bias);
  return p;
}

Vector meta_embed(std::span<const int> items, const EmbeddingTable& table) {
  Vector m = Vector::Zero(table.dim());
  if (items.empty()) return m;
  for (int item : items) m += table.row(item).transpose();
  return m / static_cast<double>(items.size());
}

Vector meta_embed_poi(int poi, const Model& model) {
  check_poi(poi, model);
  return meta_embed(model.meta.poi_items.at(poi), model.params.poi_meta);
}

Vector meta_embed_user(int user, const Model& model) {
  return meta_embed(model.meta.user_items.at(user), model.params.user_meta);
}

std::pair<double, double> interval_weights(double hours, double pi) {
  if (hours < 0.0) throw DataError("negative time interval");
  if (hours >= pi) return {0.0, 1.0};
  return {(pi - hours) / pi, hours / pi};
}

Matrix interval_matrix(double hours, const Matrix& w0, const Matrix& w_pi, double pi) {
  const auto [a0, a1] = interval_weights(hours, pi);
  if (a0 == 0.0) return w_pi;
  if (a1 == 0.0) return w0;
  return a0 * w0 + a1 * w_pi;
}

double interval_hours(std::int64_t prev_time, std::int64_t time) {
  if (time < prev_time) throw DataError("query time precedes the previous check-in");
  return static_cast<double>(time - prev_time) / 3600.0;
}

Vector poi_input(int poi, const Model& model) {
  check_poi(poi, model);
  const auto& hp = model.hp;
  Vector q = model.params.pois.row(poi).transpose();
  if (!hp.flags.use_meta) return q;
  return hp.alpha * q + (1.0 - hp.alpha) * meta_embed_poi(poi, model);
}

Vector poi_intent(const QueryContext& ctx, const Model& model) {
  const auto& hp = model.hp;
  const auto& p = model.params;
  const Vector x = poi_input(ctx.prev_poi, model);
  Vector z;
  if (hp.flags.use_interval) {
    z = interval_matrix(interval_hours(ctx.prev_time, ctx.time), p.w0, p.w_pi, hp.interval_hours) * x;
  } else {
    z = p.w1 * x;
  }
  if (hp.flags.use_timeslot) {
    z += p.slot_bias.row(time_slot(ctx.time, hp.tz_offset_seconds)).transpose();
  } else {
    z += p.b1;
  }
  return relu(z);
}

Vector user_intent(int user, const Model& model) {
  if (user < 0 || user >= model.user_count()) {
    throw DataError("unknown user id " + std::to_string(user) + "; use cold-start mode");
  }
  const auto& hp = model.hp;
  const auto& p = model.params;
  Vector x = p.users.row(user).transpose();
  if (hp.flags.use_meta) x = hp.beta * x + (1.0 - hp.beta) * meta_embed_user(user, model);
  return relu(p.w2 * x + p.b2);
}

Vector user_intent_from_meta(std::span<const int> items, const Model& model) {
  if (items.empty()) {
    throw DataError("user has neither an embedding nor known meta items; use POI-intent-only mode");
  }
  const auto& p = model.params;
  return relu(p.w2 * meta_embed(items, p.user_meta) + p.b2);
}

Vector candidate_intent(int poi, const Model& model) {
  const auto& p = model.params;
  return relu(p.w3 * poi_input(poi, model) + p.b3);
}

Matrix candidate_intents(const Model& model) {
  const auto& hp = model.hp;
  const auto& p = model.params;
  Matrix x = p.pois.values;
  if (hp.flags.use_meta) {
    Matrix meta(x.rows(), x.cols());
    for (Index q = 0; q < x.rows(); ++q) {
      meta.row(q) = meta_embed(model.meta.poi_items.at(q), p.poi_meta).transpose();
    }
    x = hp.alpha * x + (1.0 - hp.alpha) * meta;
  }
  Matrix z = x * p.w3.transpose();
  z.rowwise() += p.b3.transpose();
  return z.cwiseMax(0.0);
}

Vector query_intent(const QueryContext& ctx, const Model& model) {
  Vector h = poi_intent(ctx, model);
  switch (ctx.user.kind) {
    case UserQuery::Kind::kTrained:
      h += user_intent(ctx.user.user, model);
      break;
    case UserQuery::Kind::kMetaOnly:
      h += user_intent_from_meta(ctx.user.meta_items, model);
      break;
    case UserQuery::Kind::kNone:
      break;
  }
  return h;
}

double score(const Vector& h_u, const Vector& h_q, const Vector& c) {
  if (h_u.size() != h_q.size() || h_q.size() != c.size()) {
    throw std::invalid_argument("score: dimension mismatch");
  }
  return (h_u + h_q).dot(c);
}

Vector scores(const Vector& intent, const Matrix& candidates) { return candidates * intent; }

Vector scores(const QueryContext& ctx, const Model& model) {
  return scores(query_intent(ctx, model), candidate_intents(model));
}

Vector softmax(const Vector& y) {
  if (y.size() == 0) return y;
  const double top = y.maxCoeff();
  Vector e = (y.array() - top).exp().matrix();
  return e / e.sum();
}

Vector predict_distribution(const QueryContext& ctx, const Model& model) {
  return softmax(scores(ctx, model));
}

std::vector<Recommendation> top_k(const Vector& y, std::size_t k) {
  const auto n = static_cast<std::size_t>(y.size());
  if (k < 1 || k > n) {
    throw ConfigError("K must lie in [1, " + std::to_string(n) + "], got " + std::to_string(k));
  }
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                    [&](int a, int b) { return y[a] > y[b] || (y[a] == y[b] && a < b); });
  std::vector<Recommendation> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({ids[i], y[ids[i]]});
  return out;
}

std::vector<Recommendation> recommend_topk(const QueryContext& ctx, const Model& model,
                                           std::size_t k) {
  return top_k(scores(ctx, model), k);
}

std::int64_t rank_of(const Vector& y, int target) {
  const double t = y[target];
  std::int64_t rank = 1;
  for (Index k = 0; k < y.size(); ++k) {
    if (y[k] > t || (y[k] == t && k < target)) ++rank;
  }
  return rank;
}

}  // namespace nextpoi
