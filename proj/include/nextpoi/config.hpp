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
#include <string_view>
#include <utility>
#include <vector>

#include "nextpoi/data.hpp"
#include "nextpoi/model.hpp"
#include "nextpoi/pretrain.hpp"
#include "nextpoi/train.hpp"

namespace nextpoi {

// Everything a subcommand needs. Defaults follow the published settings:
// d = 60, alpha = 0.3, beta = 0.2, lambda = 0.01, lr = 0.005, rho = 0,
// 50 walks of length 20 per POI, at most 50 epochs.
struct RunConfig {
  std::string checkins;
  std::string pois;
  std::string user_meta;
  std::string dir = ".";
  std::string model;  // empty: <dir>/model.txt
  std::string heldout;
  std::string heldout_meta;

  DistanceMode distance = DistanceMode::kHaversine;
  ActivityThresholds thresholds;
  Hyperparams hp;
  WalkConfig walk;
  SkipGramConfig skipgram;
  TrainConfig train;
  bool pretrained = true;
  bool checkpoints = false;
  std::size_t geo_pair_cap = 0;
  std::uint64_t seed = 1;
  int threads = 1;

  std::string segment = "test";
  std::size_t cold_users = 200;
  std::size_t top_words = 10;

  std::filesystem::path model_path() const;
};

// Ordered key/value view of a config; keys double as CLI long-option names.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues to_key_values(const RunConfig& cfg);

// Throws ConfigError on an unknown key or malformed value.
void apply_key_value(RunConfig& cfg, std::string_view key, std::string_view value);

struct ConfigKey {
  std::string name;
  std::string help;
};
const std::vector<ConfigKey>& config_keys();

// Flat "key=value" text; blank lines and lines starting with '#' are ignored.
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace nextpoi
