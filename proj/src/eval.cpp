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

#include "nextpoi/eval.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <random>

#include "nextpoi/parallel.hpp"

namespace nextpoi {

double acc_at_k(std::span<const std::int64_t> ranks, std::int64_t k) {
  if (ranks.empty()) throw DataError("acc@K over an empty instance list");
  if (k < 1) throw ConfigError("acc@K needs K >= 1");
  std::size_t hits = 0;
  for (auto r : ranks) hits += r <= k ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mean_average_precision(std::span<const std::int64_t> ranks) {
  if (ranks.empty()) throw DataError("MAP over an empty instance list");
  double sum = 0.0;
  for (auto r : ranks) {
    if (r < 1) throw DataError("ranks are 1-based");
    sum += 1.0 / static_cast<double>(r);
  }
  return sum / static_cast<double>(ranks.size());
}

std::vector<std::int64_t> EvalReport::ranks() const {
  std::vector<std::int64_t> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.rank);
  return out;
}

EvalReport summarize(std::vector<EvalRecord> records, std::size_t skipped) {
  EvalReport report;
  report.records = std::move(records);
  report.skipped = skipped;
  if (report.records.empty()) return report;
  const auto ranks = report.ranks();
  report.acc1 = acc_at_k(ranks, 1);
  report.acc5 = acc_at_k(ranks, 5);
  report.acc10 = acc_at_k(ranks, 10);
  report.map = mean_average_precision(ranks);
  return report;
}

EvalReport evaluate_instances(const std::vector<TrainInstance>& instances,
                              const std::vector<std::string>& user_ids, const ScoreFn& score_fn,
                              int threads) {
  std::vector<EvalRecord> records(instances.size());
  parallel_for(instances.size(), threads, [&](std::size_t i) {
    const auto& inst = instances[i];
    const Vector y = score_fn(inst);
    records[i] = {user_ids.at(inst.user), inst.prev_poi, inst.target, inst.time,
                  rank_of(y, inst.target)};
  });
  return summarize(std::move(records));
}

namespace {

ScoreFn model_scorer(const Model& model) {
  // Candidate intents do not depend on the query; compute them once.
  auto candidates = std::make_shared<const Matrix>(candidate_intents(model));
  return [&model, candidates](const TrainInstance& inst) {
    return scores(query_intent(inst.context(), model), *candidates);
  };
}

}  // namespace

EvalReport evaluate(const Model& model, const Dataset& data, const Split& split, Segment segment,
                    int threads) {
  std::vector<std::string> ids;
  ids.reserve(data.users.size());
  for (const auto& u : data.users) ids.push_back(u.id);
  return evaluate_instances(segment_instances(data, split, segment), ids, model_scorer(model),
                            threads);
}

double validation_map(const Model& model, const std::vector<TrainInstance>& instances,
                      int threads) {
  const auto report = evaluate_instances(instances, model.vocab.users, model_scorer(model), threads);
  return report.map;
}

std::vector<ColdUser> make_cold_users(std::span<const RawCheckIn> checkins,
                                      std::span<const RawUser> meta, const Vocabulary& vocab,
                                      std::size_t* dropped_items) {
  std::map<std::string, ColdUser, std::less<>> users;
  for (const auto& c : checkins) {
    auto& u = users[c.user_id];
    u.id = c.user_id;
    const auto poi = vocab.find_poi(c.poi_id);
    u.visits.emplace_back(poi ? *poi : -1, c.timestamp);
  }
  std::size_t dropped = 0;
  for (const auto& m : meta) {
    auto it = users.find(m.id);
    if (it == users.end()) continue;
    for (const auto& item : m.items) {
      if (auto id = vocab.find_user_item(item)) {
        it->second.meta_items.push_back(*id);
      } else {
        ++dropped;
      }
    }
  }
  if (dropped_items != nullptr) *dropped_items = dropped;

  std::vector<ColdUser> out;
  for (auto& [id, u] : users) {
    if (vocab.find_user(id)) {
      throw DataError("held-out user " + id + " is part of the trained model");
    }
    std::stable_sort(u.visits.begin(), u.visits.end(),
                     [](const auto& a, const auto& b) { return a.second < b.second; });
    std::sort(u.meta_items.begin(), u.meta_items.end());
    u.meta_items.erase(std::unique(u.meta_items.begin(), u.meta_items.end()), u.meta_items.end());
    out.push_back(std::move(u));
  }
  return out;
}

EvalReport cold_start_eval(const Model& model, std::span<const ColdUser> users,
                           std::uint64_t seed, std::size_t max_users) {
  std::vector<std::size_t> order(users.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return users[a].id < users[b].id; });
  // Streams are keyed by position in id order, so input order does not matter.
  std::vector<std::size_t> stream(users.size());
  for (std::size_t i = 0; i < order.size(); ++i) stream[order[i]] = i;
  std::mt19937_64 pick_users(derive_seed(seed, 0xc01d));
  shuffle(order, pick_users);

  const Matrix candidates = candidate_intents(model);
  std::vector<EvalRecord> records;
  std::size_t skipped = 0;
  for (std::size_t idx : order) {
    if (records.size() >= max_users) break;
    const auto& user = users[idx];
    if (model.vocab.find_user(user.id)) {
      throw DataError("held-out user " + user.id + " is part of the trained model");
    }
    std::vector<std::size_t> qualifying;
    for (std::size_t i = 1; i < user.visits.size(); ++i) {
      if (user.visits[i - 1].first >= 0 && user.visits[i].first >= 0) qualifying.push_back(i);
    }
    if (qualifying.empty()) {
      ++skipped;
      continue;
    }
    std::mt19937_64 rng(derive_seed(seed, 0xc02d, stream[idx]));
    const auto i = qualifying[uniform_index(rng, qualifying.size())];
    QueryContext ctx{user.meta_items.empty() ? UserQuery::none() : UserQuery::meta_only(user.meta_items),
                     user.visits[i - 1].first, user.visits[i - 1].second, user.visits[i].second};
    const int target = user.visits[i].first;
    const Vector y = scores(query_intent(ctx, model), candidates);
    records.push_back({user.id, ctx.prev_poi, target, ctx.time, rank_of(y, target)});
  }
  return summarize(std::move(records), skipped);
}

Vector word_contribution(int word, const Model& model) {
  const auto& p = model.params;
  if (word < 0 || word >= p.poi_meta.size()) {
    throw DataError("unknown POI meta word id " + std::to_string(word));
  }
  return relu(p.w3 * p.poi_meta.row(word).transpose() + p.b3);
}

std::vector<KeywordScore> dimension_keywords(int dimension, std::size_t top_n, const Model& model) {
  if (dimension < 0 || dimension >= model.hp.dim) {
    throw ConfigError("dimension " + std::to_string(dimension) + " out of range");
  }
  std::vector<KeywordScore> out;
  for (Index w = 0; w < model.params.poi_meta.size(); ++w) {
    const Vector omega = word_contribution(static_cast<int>(w), model);
    const double total = omega.sum();
    if (!(total > 0.0)) continue;
    out.push_back({static_cast<int>(w), omega[dimension] / total});
  }
  std::sort(out.begin(), out.end(), [](const KeywordScore& a, const KeywordScore& b) {
    return a.score > b.score || (a.score == b.score && a.word < b.word);
  });
  if (out.size() > top_n) out.resize(top_n);
  return out;
}

}  // namespace nextpoi
