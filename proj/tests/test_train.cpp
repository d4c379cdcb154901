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

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "nextpoi/eval.hpp"
#include "nextpoi/train.hpp"
#include "synthetic.hpp"

using namespace nextpoi;

namespace {

constexpr std::int64_t kNoon = 1577880000;

TrainInstance instance(int user, int prev, int target, std::int64_t gap = 7200) {
  return {user, prev, kNoon - gap, kNoon, target};
}

void zero(GradientSet& g) {
  for (Matrix* m : {&g.pois, &g.poi_meta, &g.w0, &g.w_pi, &g.w1, &g.w2, &g.w3}) m->setZero();
  for (Vector* v : {&g.b1, &g.b2, &g.b3, &g.slot_bias, &g.user_row}) v->setZero();
  for (auto& [row, grad] : g.user_meta_rows) grad.setZero();
}

// d = 2 model over `pois` POIs with identity transitions and no meta-data.
Model plain_model(int pois) {
  Model m;
  m.hp.dim = 2;
  m.hp.flags.use_meta = false;
  m.params = random_parameters({1, pois, 0, 0, 2}, 1, 0.0);
  m.meta.poi_items.assign(pois, {});
  m.meta.user_items = {{}};
  m.params.w0 = Matrix::Identity(2, 2);
  m.params.w_pi = Matrix::Identity(2, 2);
  m.params.w3 = Matrix::Identity(2, 2);
  return m;
}

}  // namespace

TEST_CASE("instances come from consecutive check-ins") {
  std::vector<RawCheckIn> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({"u", testing::poi_name(i), 100 * (i + 1)});
  std::vector<RawPoi> pois;
  for (int i = 0; i < 10; ++i) pois.push_back({testing::poi_name(i), 0, 0, {}});
  const auto data = build_dataset(rows, pois, {});
  const auto split = split_chronological(data);

  const auto train = training_instances(data, split);
  REQUIRE(train.size() == 6);
  CHECK(train[0].prev_poi == 0);
  CHECK(train[0].target == 1);
  CHECK(train[5].target == 6);
  CHECK(train[5].prev_time == 600);
  CHECK(train[5].time == 700);

  const auto valid = segment_instances(data, split, Segment::kValidation);
  REQUIRE(valid.size() == 1);
  CHECK(valid[0].prev_poi == 6);
  CHECK(valid[0].target == 7);

  const auto test = segment_instances(data, split, Segment::kTest);
  REQUIRE(test.size() == 2);
  CHECK(test[0].prev_poi == 7);
  CHECK(test[1].prev_poi == 8);
  CHECK(test[1].target == 9);
}

TEST_CASE("instance loss") {
  SUBCASE("uniform model") {
    auto m = testing::toy_model({});
    m.params = random_parameters({10, 20, 4, 5, 8}, 1, 0.0);
    CHECK(instance_loss(instance(0, 1, 2), m) == doctest::Approx(std::log(20.0)).epsilon(1e-14));
  }
  SUBCASE("certain prediction") {
    auto m = plain_model(2);
    m.params.pois.values << 1, 0, 0, 1;
    m.params.w3 *= 1000.0;
    CHECK(instance_loss(instance(0, 0, 0), m) < 1e-300);
    CHECK(instance_loss(instance(0, 0, 1), m) == doctest::Approx(1000.0));
  }
  SUBCASE("hand-evaluated three-POI model") {
    auto m = plain_model(3);
    m.params.pois.values << 1, 0, 0, 1, 0.5, 0.5;
    m.params.w2 = Matrix::Identity(2, 2);
    m.params.users.values << 0.2, 0.4;
    // h_q from POI 0 is (1, 0); h_u = (0.2, 0.4); sum (1.2, 0.4).
    // Candidates are the POI vectors: scores 1.2, 0.4, 0.8.
    const double z = std::exp(1.2) + std::exp(0.4) + std::exp(0.8);
    CHECK(instance_loss(instance(0, 0, 2), m) == doctest::Approx(std::log(z) - 0.8).epsilon(1e-14));
    double loss = 0.0;
    instance_gradients(instance(0, 0, 2), m, &loss);
    CHECK(loss == doctest::Approx(std::log(z) - 0.8).epsilon(1e-14));
  }
}

TEST_CASE("gradient structure") {
  SUBCASE("dead user units give no W2 gradient") {
    auto m = testing::toy_model({});
    m.params.b2.setConstant(-100.0);
    const auto g = instance_gradients(instance(1, 2, 3), m);
    CHECK(g.w2.isZero(0.0));
    CHECK(g.b2.isZero(0.0));
    CHECK(g.user_row.isZero(0.0));
  }
  SUBCASE("interval endpoints") {
    auto m = testing::toy_model({});
    const auto now = instance_gradients(instance(1, 2, 3, 0), m);
    CHECK(now.w_pi.isZero(0.0));
    CHECK_FALSE(now.w0.isZero(0.0));
    const auto later = instance_gradients(instance(1, 2, 3, 6 * 3600), m);
    CHECK(later.w0.isZero(0.0));
    CHECK_FALSE(later.w_pi.isZero(0.0));
    const auto much_later = instance_gradients(instance(1, 2, 3, 50 * 3600), m);
    CHECK(much_later.w0.isZero(0.0));
  }
  SUBCASE("sparse user side") {
    auto m = testing::toy_model({});
    const auto g = instance_gradients(instance(4, 2, 3), m);
    CHECK(g.user == 4);
    CHECK(g.slot == 12);
    CHECK(g.user_meta_rows.size() == m.meta.user_items[4].size());
  }
}

TEST_CASE("finite-difference agreement under every flag combination") {
  for (int f = 0; f < 8; ++f) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      testing::ToySpec spec;
      spec.seed = seed;
      auto m = testing::toy_model(spec);
      m.hp.flags = {(f & 1) != 0, (f & 2) != 0, (f & 4) != 0};
      const auto r = gradient_check(m, instance(static_cast<int>(seed), 3, 5, 5000), 1e-4, 200, seed);
      CAPTURE(f);
      CAPTURE(r.worst_tensor);
      CHECK(r.max_relative_error < 1e-4);
      CHECK(r.checked > 100);
    }
  }
}

TEST_CASE("finite differences in the linear region") {
  auto m = testing::toy_model({});
  m.params.b2.setConstant(5.0);
  m.params.b3.setConstant(5.0);
  m.params.slot_bias.setConstant(5.0);
  const auto r = gradient_check(m, instance(2, 6, 1), 1e-4, 400);
  CHECK(r.skipped_kinks == 0);
  CHECK(r.max_relative_error < 1e-6);
}

TEST_CASE("kink coordinates are excluded") {
  // A unit sitting exactly at zero pre-activation must be skipped.
  auto m = testing::toy_model({});
  const Vector z = m.params.w3 * poi_input(0, m);
  m.params.b3[0] = -z[0];
  const auto r = gradient_check(m, instance(2, 6, 1), 1e-4, 400);
  CHECK(r.skipped_kinks > 0);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("sgd step") {
  auto m = testing::toy_model({});
  auto g = instance_gradients(instance(1, 2, 3), m);
  zero(g);
  auto p = m.params;
  sgd_step(p, g, 0.1, 0.0);
  CHECK(p.w3 == m.params.w3);
  CHECK(p.users.values == m.params.users.values);

  p.b2[0] = 1.0;
  g.b2[0] = 0.5;
  sgd_step(p, g, 0.1, 0.0);
  CHECK(p.b2[0] == doctest::Approx(0.95).epsilon(1e-15));

  g.b2[0] = 0.0;
  const double before = p.w3.norm();
  sgd_step(p, g, 0.1, 0.01);
  CHECK(p.w3.norm() < before);
  // Rows the instance did not reach keep their value.
  CHECK(p.users.row(0) == m.params.users.row(0));
}

TEST_CASE("a small step lowers the instance loss") {
  for (int f = 0; f < 8; ++f) {
    auto m = testing::toy_model({});
    m.hp.flags = {(f & 1) != 0, (f & 2) != 0, (f & 4) != 0};
    const auto inst = instance(3, 8, 11, 9000);
    double before = 0.0;
    const auto g = instance_gradients(inst, m, &before);
    sgd_step(m.params, g, 1e-4, 0.0);
    CHECK(instance_loss(inst, m) < before);
  }
}

TEST_CASE("early stopping keeps the best snapshot") {
  auto m = testing::toy_model({});
  std::vector<TrainInstance> data{instance(0, 1, 2), instance(1, 2, 3), instance(2, 3, 4)};
  std::vector<Parameters> seen;
  int calls = 0;
  auto falling = [&](const Model& model) {
    seen.push_back(model.params);
    return 1.0 - 0.1 * ++calls;
  };
  TrainConfig cfg;
  cfg.patience = 1;
  const auto r = train(m, data, falling, cfg);
  CHECK(r.history.size() == 2);
  CHECK(r.best_epoch == 1);
  CHECK(r.best.w3 == seen[0].w3);
  CHECK(r.best_valid_map == doctest::Approx(0.9));

  calls = 0;
  auto flat = [&](const Model&) { return 0.5; };
  cfg.patience = 3;
  const auto plateau = train(m, data, flat, cfg);
  CHECK(plateau.history.size() == 4);
  CHECK(plateau.best_epoch == 1);

  cfg.max_epochs = 3;
  cfg.patience = 10;
  CHECK(train(m, data, flat, cfg).history.size() == 3);
  CHECK_THROWS_AS(train(m, {}, flat, cfg), DataError);
  cfg.patience = 0;
  CHECK_THROWS_AS(train(m, data, flat, cfg), ConfigError);
}

TEST_CASE("divergence is reported") {
  auto m = testing::toy_model({});
  m.hp.learning_rate = 1e8;
  m.params.w3 *= 50.0;
  std::vector<TrainInstance> data{instance(0, 1, 2), instance(1, 2, 3), instance(2, 3, 4)};
  TrainConfig cfg;
  cfg.max_epochs = 20;
  CHECK_THROWS_AS(train(m, data, [](const Model&) { return 0.0; }, cfg), DivergenceError);
}

TEST_CASE("training is deterministic and learns a planted chain") {
  testing::CorpusSpec spec;
  spec.users = 20;
  const auto data = testing::to_dataset(testing::planted_markov(spec));
  const auto split = split_chronological(data);
  const auto instances = training_instances(data, split);
  const auto valid = segment_instances(data, split, Segment::kValidation);

  Model m;
  m.hp.dim = 16;
  m.hp.learning_rate = 0.05;
  m.params = random_parameters({20, 30, 0, 0, 16}, 3, 0.3);
  m.meta.poi_items.assign(30, {});
  m.meta.user_items.assign(20, {});
  for (const auto& u : data.users) m.vocab.users.push_back(u.id);
  for (const auto& q : data.pois) m.vocab.pois.push_back(q.id);
  m.hp.flags.use_meta = false;
  TrainConfig cfg;
  cfg.max_epochs = 15;
  cfg.patience = 15;
  auto validator = [&](const Model& model) { return validation_map(model, valid, 1); };
  const auto a = train(m, instances, validator, cfg);
  const auto b = train(m, instances, validator, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].valid_map == b.history[i].valid_map);
  }
  CHECK(a.best.w3 == b.best.w3);
  CHECK(a.history.back().train_loss < a.history.front().train_loss);
  CHECK(a.best_valid_map > 0.5);

  // The recorded best MAP is what the returned snapshot scores.
  m.params = a.best;
  CHECK(validation_map(m, valid, 1) == a.best_valid_map);
}
