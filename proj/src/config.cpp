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

#include "nextpoi/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "nextpoi/io.hpp"

namespace nextpoi {
namespace {

struct Field {
  ConfigKey key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <class T>
T parse_integer(std::string_view key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config '" + std::string(key) + "': invalid integer '" + std::string(text) + "'");
  }
  return value;
}

double parse_real(std::string_view key, std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config '" + std::string(key) + "': invalid number '" + std::string(text) + "'");
  }
  return value;
}

bool parse_flag(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError("config '" + std::string(key) + "': invalid boolean '" + std::string(text) + "'");
}

template <class Get, class Set>
Field custom(std::string name, std::string help, Get get, Set set) {
  return {{std::move(name), std::move(help)}, get, set};
}

Field text(std::string name, std::string help, std::string RunConfig::*member) {
  return {{std::move(name), std::move(help)},
          [member](const RunConfig& c) { return c.*member; },
          [member](RunConfig& c, std::string_view v) { c.*member = std::string(v); }};
}

#define NEXTPOI_REAL(NAME, HELP, EXPR)                                               \
  custom(NAME, HELP, [](const RunConfig& c) { return format_double(c.EXPR); },      \
         [](RunConfig& c, std::string_view v) { c.EXPR = parse_real(NAME, v); })
#define NEXTPOI_INT(NAME, HELP, TYPE, EXPR)                                          \
  custom(NAME, HELP, [](const RunConfig& c) { return std::to_string(c.EXPR); },     \
         [](RunConfig& c, std::string_view v) { c.EXPR = parse_integer<TYPE>(NAME, v); })
#define NEXTPOI_BOOL(NAME, HELP, EXPR)                                               \
  custom(NAME, HELP, [](const RunConfig& c) { return std::string(c.EXPR ? "true" : "false"); }, \
         [](RunConfig& c, std::string_view v) { c.EXPR = parse_flag(NAME, v); })

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      text("checkins", "raw check-in file (user, poi, timestamp)", &RunConfig::checkins),
      text("pois", "raw POI file (poi, latitude, longitude, words)", &RunConfig::pois),
      text("user_meta", "raw user meta-data file (optional)", &RunConfig::user_meta),
      text("dir", "working directory holding the dataset bundle and artifacts", &RunConfig::dir),
      text("model", "model archive path (default <dir>/model.txt)", &RunConfig::model),
      text("heldout", "held-out user check-ins for cold-start evaluation", &RunConfig::heldout),
      text("heldout_meta", "held-out user meta-data (optional)", &RunConfig::heldout_meta),
      custom("distance", "haversine | planar",
             [](const RunConfig& c) { return std::string(to_string(c.distance)); },
             [](RunConfig& c, std::string_view v) { c.distance = parse_distance_mode(v); }),
      NEXTPOI_INT("min_user_checkins", "keep users with at least this many check-ins", int,
                  thresholds.min_user_checkins),
      NEXTPOI_INT("min_poi_users", "keep POIs visited by at least this many users", int,
                  thresholds.min_poi_users),
      NEXTPOI_INT("dim", "embedding and intent dimension", int, hp.dim),
      NEXTPOI_REAL("alpha", "POI embedding weight against POI meta-data", hp.alpha),
      NEXTPOI_REAL("beta", "user embedding weight against user meta-data", hp.beta),
      NEXTPOI_REAL("interval_hours", "interval threshold pi in hours", hp.interval_hours),
      NEXTPOI_REAL("lambda", "L2 regularization weight", hp.lambda),
      NEXTPOI_REAL("learning_rate", "SGD learning rate", hp.learning_rate),
      NEXTPOI_BOOL("use_meta", "fuse user and POI meta-data", hp.flags.use_meta),
      NEXTPOI_BOOL("use_interval", "interval-dependent transition matrix", hp.flags.use_interval),
      NEXTPOI_BOOL("use_timeslot", "hour-of-day bias vectors", hp.flags.use_timeslot),
      NEXTPOI_INT("tz_offset_seconds", "offset added to UTC before taking the hour slot",
                  std::int64_t, hp.tz_offset_seconds),
      NEXTPOI_REAL("rho", "geographic weight of the random walk", walk.rho),
      NEXTPOI_INT("walks_per_node", "random walks started from every POI", int,
                  walk.walks_per_node),
      NEXTPOI_INT("walk_length", "maximum walk length in POIs", int, walk.walk_length),
      NEXTPOI_INT("window", "SkipGram context window", int, skipgram.window),
      NEXTPOI_INT("skipgram_epochs", "SkipGram passes over the walks", int, skipgram.epochs),
      NEXTPOI_REAL("skipgram_lr", "initial SkipGram learning rate", skipgram.initial_learning_rate),
      NEXTPOI_INT("max_epochs", "maximum training epochs", int, train.max_epochs),
      NEXTPOI_INT("patience", "epochs without validation MAP gain before stopping", int,
                  train.patience),
      NEXTPOI_BOOL("pretrained", "initialize Q and U from pre-trained embeddings", pretrained),
      NEXTPOI_BOOL("checkpoints", "write a model archive after every epoch", checkpoints),
      NEXTPOI_INT("geo_pair_cap", "sample at most this many POI pairs for distance stats (0: all)",
                  std::size_t, geo_pair_cap),
      NEXTPOI_INT("seed", "global random seed", std::uint64_t, seed),
      NEXTPOI_INT("threads", "worker threads for walks and evaluation", int, threads),
      text("segment", "validation | test | coldstart", &RunConfig::segment),
      NEXTPOI_INT("cold_users", "held-out users sampled for cold-start evaluation", std::size_t,
                  cold_users),
      NEXTPOI_INT("top_words", "words listed per dimension by interpret", std::size_t, top_words),
  };
  return table;
}

#undef NEXTPOI_REAL
#undef NEXTPOI_INT
#undef NEXTPOI_BOOL

}  // namespace

std::filesystem::path RunConfig::model_path() const {
  return model.empty() ? std::filesystem::path(dir) / "model.txt" : std::filesystem::path(model);
}

KeyValues to_key_values(const RunConfig& cfg) {
  KeyValues out;
  for (const auto& f : fields()) out.emplace_back(f.key.name, f.get(cfg));
  return out;
}

void apply_key_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (f.key.name == key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& f : fields()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    out.emplace_back(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

void write_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& [k, v] : to_key_values(cfg)) out << k << '=' << v << '\n';
}

RunConfig load_config(const std::filesystem::path& path) {
  RunConfig cfg;
  for (const auto& [k, v] : read_key_values(path)) apply_key_value(cfg, k, v);
  return cfg;
}

}  // namespace nextpoi
