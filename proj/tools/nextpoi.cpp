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

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "nextpoi/commands.hpp"
#include "nextpoi/config.hpp"

namespace {

using namespace nextpoi;

std::string flag_name(std::string key) {
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return "--" + key;
}

// Options shared by every subcommand. Values are kept as text and applied
// through the config layer after an optional --config file.
struct CommonOptions {
  std::string config_file;
  std::map<std::string, std::pair<CLI::Option*, std::string>> values;
  CLI::Option* no_meta = nullptr;
  CLI::Option* no_interval = nullptr;
  CLI::Option* no_timeslot = nullptr;
  CLI::Option* no_pretrain = nullptr;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_file, "key=value config file")->check(CLI::ExistingFile);
    for (const auto& key : config_keys()) {
      auto& slot = values[key.name];
      slot.first = sub->add_option(flag_name(key.name), slot.second, key.help);
    }
    no_meta = sub->add_flag("--no-meta", "same as --use-meta false");
    no_interval = sub->add_flag("--no-interval", "same as --use-interval false");
    no_timeslot = sub->add_flag("--no-timeslot", "same as --use-timeslot false");
    no_pretrain = sub->add_flag("--no-pretrain", "random init instead of pre-trained Q and U");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_file.empty()) {
      for (const auto& [k, v] : read_key_values(config_file)) apply_key_value(cfg, k, v);
    }
    for (const auto& [k, slot] : values) {
      if (slot.first->count() > 0) apply_key_value(cfg, k, slot.second);
    }
    if (no_meta->count() > 0) cfg.hp.flags.use_meta = false;
    if (no_interval->count() > 0) cfg.hp.flags.use_interval = false;
    if (no_timeslot->count() > 0) cfg.hp.flags.use_timeslot = false;
    if (no_pretrain->count() > 0) cfg.pretrained = false;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nextpoi: next-POI recommendation from check-in sequences"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    CommonOptions opts;
  };
  std::vector<std::pair<std::string, std::string>> names = {
      {"preprocess", "filter, split and index raw check-ins"},
      {"pretrain", "random walks and SkipGram POI embeddings"},
      {"train", "fit the model with early stopping"},
      {"evaluate", "rank metrics on validation, test or coldstart"},
      {"recommend", "top-K POIs for one query"},
      {"interpret", "top words per hidden dimension"},
  };
  std::map<std::string, Sub> subs;
  for (const auto& [name, help] : names) {
    auto& s = subs[name];
    s.app = app.add_subcommand(name, help);
    s.opts.attach(s.app);
  }

  RecommendRequest req;
  auto* rec = subs["recommend"].app;
  rec->add_option("--user", req.user, "user id");
  rec->add_option("--prev-poi", req.prev_poi, "previous POI id")->required();
  rec->add_option("--time", req.time, "query timestamp (unix seconds)")->required();
  rec->add_option("--prev-time", req.prev_time, "timestamp of the previous visit; defaults to --time");
  rec->add_option("--k", req.k, "list length")->check(CLI::PositiveNumber);
  rec->add_flag("--cold-user", req.cold_user, "user not in the model");
  rec->add_option("--meta", req.meta_items, "user meta items for --cold-user")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    for (auto& [name, s] : subs) {
      if (!s.app->parsed()) continue;
      const RunConfig cfg = s.opts.resolve();
      if (name == "preprocess") {
        cmd_preprocess(cfg, std::cout);
      } else if (name == "pretrain") {
        cmd_pretrain(cfg, std::cerr);
      } else if (name == "train") {
        cmd_train(cfg, std::cerr);
      } else if (name == "evaluate") {
        cmd_evaluate(cfg, std::cout);
      } else if (name == "recommend") {
        if (rec->get_option("--prev-time")->count() == 0) req.prev_time = req.time;
        if (!req.cold_user && req.user.empty()) throw ConfigError("--user is required without --cold-user");
        cmd_recommend(cfg, req, std::cout, std::cerr);
      } else if (name == "interpret") {
        cmd_interpret(cfg, std::cerr);
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
