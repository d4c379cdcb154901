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
#include <fstream>
#include <limits>
#include <sstream>

#include "nextpoi/config.hpp"
#include "nextpoi/io.hpp"
#include "synthetic.hpp"

using namespace nextpoi;

namespace {

bool same_params(const Parameters& a, const Parameters& b) {
  return a.users.values == b.users.values && a.pois.values == b.pois.values &&
         a.user_meta.values == b.user_meta.values && a.poi_meta.values == b.poi_meta.values &&
         a.w0 == b.w0 && a.w_pi == b.w_pi && a.w1 == b.w1 && a.w2 == b.w2 && a.w3 == b.w3 &&
         a.b1 == b.b1 && a.b2 == b.b2 && a.b3 == b.b3 && a.slot_bias == b.slot_bias;
}

}  // namespace

TEST_CASE("shortest round-trip formatting") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(3.0) == "3");
}

TEST_CASE("embedding tables") {
  EmbeddingTable t(3, 2);
  t.values << 0.1, -1.0 / 3.0, 1e-17, 4.0, -0.0, 123456.789;
  const std::vector<std::string> ids{"a", "b", "c"};
  std::stringstream buf;
  write_embedding_table(buf, t, ids);
  const auto text = buf.str();
  CHECK(text.substr(0, 4) == "3 2\n");
  CHECK(text.find("\na 0.1 ") != std::string::npos);

  std::vector<std::string> back_ids;
  const auto back = read_embedding_table(buf, &back_ids);
  CHECK(back.values == t.values);
  CHECK(back_ids == ids);

  std::stringstream bad_id;
  CHECK_THROWS_AS(write_embedding_table(bad_id, t, std::vector<std::string>{"a", "b c", "d"}), DataError);
  CHECK_THROWS_AS(write_embedding_table(bad_id, t, std::vector<std::string>{"a"}), std::invalid_argument);

  for (const char* broken : {"", "2 2\na 1 2\n", "1 2\na 1\n", "1 2\na 1 2 3\n", "1 2\na 1 nan\n",
                             "1 2\na 1 x\n", "x y\n"}) {
    std::stringstream in(broken);
    CAPTURE(broken);
    CHECK_THROWS_AS(read_embedding_table(in), DataError);
  }

  const auto dir = testing::scratch_dir("io_tables");
  save_embedding_table(dir / "t.txt", t, ids);
  CHECK(load_embedding_table(dir / "t.txt").values == t.values);
  CHECK_THROWS_AS(load_embedding_table(dir / "none.txt"), DataError);
}

TEST_CASE("walk export") {
  const auto dir = testing::scratch_dir("io_walks");
  save_walks(dir / "w.txt", {{0, 2, 1}, {1}}, std::vector<std::string>{"x", "y", "z"});
  std::ifstream in(dir / "w.txt");
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == "x z y\ny\n");
}

TEST_CASE("model archives round-trip exactly") {
  for (int f = 0; f < 8; ++f) {
    auto m = testing::toy_model({});
    m.hp.flags = {(f & 1) != 0, (f & 2) != 0, (f & 4) != 0};
    m.hp.alpha = 0.45;
    m.hp.interval_hours = 72.0;
    m.hp.tz_offset_seconds = -18000;
    std::stringstream buf;
    write_model(buf, m);
    const auto back = read_model(buf);
    CHECK(back.hp.flags == m.hp.flags);
    CHECK(back.hp.alpha == 0.45);
    CHECK(back.hp.interval_hours == 72.0);
    CHECK(back.hp.tz_offset_seconds == -18000);
    CHECK(back.hp.dim == 8);
    CHECK(same_params(back.params, m.params));
    CHECK(back.meta.poi_items == m.meta.poi_items);
    CHECK(back.meta.user_items == m.meta.user_items);
    CHECK(back.vocab.pois == m.vocab.pois);
    CHECK(back.vocab.poi_words == m.vocab.poi_words);

    std::stringstream again;
    write_model(again, back);
    CHECK(again.str() == buf.str());
  }
}

TEST_CASE("damaged model archives are rejected") {
  const auto m = testing::toy_model({});
  std::stringstream buf;
  write_model(buf, m);
  const auto text = buf.str();

  auto rejects = [](const std::string& s) {
    std::stringstream in(s);
    CHECK_THROWS_AS(read_model(in), DataError);
  };
  rejects("not a model\n");
  rejects(text.substr(0, text.size() / 2));
  auto bad_dim = text;
  bad_dim.replace(bad_dim.find("dim=8"), 5, "dim=9");
  rejects(bad_dim);
  auto bad_slots = text;
  bad_slots.replace(bad_slots.find("slots=24"), 8, "slots=12");
  rejects(bad_slots);
  CHECK_THROWS_AS(load_model("/nonexistent/model.txt"), DataError);
}

TEST_CASE("config keys round-trip") {
  RunConfig cfg;
  cfg.checkins = "in/c.tsv";
  cfg.hp.dim = 16;
  cfg.hp.alpha = 0.125;
  cfg.hp.flags.use_timeslot = false;
  cfg.walk.rho = 0.5;
  cfg.distance = DistanceMode::kPlanar;
  cfg.seed = 1234567890123ULL;
  cfg.cold_users = 50;
  cfg.train.patience = 9;

  const auto dir = testing::scratch_dir("config");
  write_config(dir / "run.config", cfg);
  const auto back = load_config(dir / "run.config");
  CHECK(to_key_values(back) == to_key_values(cfg));
  CHECK(back.hp.alpha == 0.125);
  CHECK(back.distance == DistanceMode::kPlanar);
  CHECK(back.seed == 1234567890123ULL);

  CHECK(config_keys().size() == to_key_values(cfg).size());
  for (const auto& key : config_keys()) CHECK_FALSE(key.help.empty());
}

TEST_CASE("config defaults follow the published settings") {
  const RunConfig cfg;
  CHECK(cfg.hp.dim == 60);
  CHECK(cfg.hp.alpha == 0.3);
  CHECK(cfg.hp.beta == 0.2);
  CHECK(cfg.hp.lambda == 0.01);
  CHECK(cfg.hp.learning_rate == 0.005);
  CHECK(cfg.walk.rho == 0.0);
  CHECK(cfg.walk.walks_per_node == 50);
  CHECK(cfg.walk.walk_length == 20);
  CHECK(cfg.train.max_epochs == 50);
  CHECK(cfg.thresholds.min_user_checkins == 10);
  CHECK(cfg.thresholds.min_poi_users == 10);
  CHECK(cfg.top_words == 10);
  CHECK(cfg.cold_users == 200);
  CHECK(cfg.model_path() == std::filesystem::path(".") / "model.txt");
}

TEST_CASE("config parsing") {
  const auto kv = parse_key_values("# comment\n\n  dim = 32 \nuse_meta=off\n");
  REQUIRE(kv.size() == 2);
  CHECK(kv[0] == std::pair<std::string, std::string>{"dim", "32"});
  RunConfig cfg;
  for (const auto& [k, v] : kv) apply_key_value(cfg, k, v);
  CHECK(cfg.hp.dim == 32);
  CHECK_FALSE(cfg.hp.flags.use_meta);

  CHECK_THROWS_AS(parse_key_values("dim 32\n"), ConfigError);
  CHECK_THROWS_AS(apply_key_value(cfg, "dimension", "3"), ConfigError);
  CHECK_THROWS_AS(apply_key_value(cfg, "dim", "3.5"), ConfigError);
  CHECK_THROWS_AS(apply_key_value(cfg, "alpha", "half"), ConfigError);
  CHECK_THROWS_AS(apply_key_value(cfg, "use_meta", "maybe"), ConfigError);
  CHECK_THROWS_AS(apply_key_value(cfg, "distance", "taxicab"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent.config"), ConfigError);
}
