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

#include "nextpoi/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>

#include "nextpoi/io.hpp"
#include "nextpoi/pretrain.hpp"

namespace nextpoi {
namespace fs = std::filesystem;
namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

fs::path ensure_dir(const RunConfig& cfg) {
  const fs::path dir(cfg.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::string join(const std::vector<int>& ids, const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ',';
    out += names.at(ids[i]);
  }
  return out;
}

void write_bundle(const fs::path& dir, const Dataset& data, const Split& split,
                  const DatasetStats& stats) {
  {
    auto out = open_out(dir / kBundleCheckins);
    for (std::size_t u = 0; u < data.sequences.size(); ++u) {
      for (const auto& c : data.sequences[u]) {
        out << data.users[u].id << '\t' << data.pois[c.poi].id << '\t' << c.timestamp << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / kBundlePois);
    for (const auto& p : data.pois) {
      out << p.id << '\t' << format_double(p.latitude) << '\t' << format_double(p.longitude);
      if (!p.meta_items.empty()) out << '\t' << join(p.meta_items, data.poi_words);
      out << '\n';
    }
  }
  {
    auto out = open_out(dir / kBundleUserMeta);
    for (const auto& u : data.users) {
      if (!u.meta_items.empty()) out << u.id << '\t' << join(u.meta_items, data.user_items) << '\n';
    }
  }
  {
    auto out = open_out(dir / kBundleVocab);
    out << "kind\tdense_id\tid\n";
    auto dump = [&](const char* kind, auto&& name_of, std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) out << kind << '\t' << i << '\t' << name_of(i) << '\n';
    };
    dump("user", [&](std::size_t i) { return data.users[i].id; }, data.users.size());
    dump("poi", [&](std::size_t i) { return data.pois[i].id; }, data.pois.size());
    dump("poi_word", [&](std::size_t i) { return data.poi_words[i]; }, data.poi_words.size());
    dump("user_item", [&](std::size_t i) { return data.user_items[i]; }, data.user_items.size());
  }
  {
    auto out = open_out(dir / kBundleSplit);
    out << "user\ttrain\tvalidation\ttest\n";
    for (std::size_t u = 0; u < data.users.size(); ++u) {
      const auto& b = split.users[u];
      out << data.users[u].id << '\t' << b.train_end << '\t' << b.valid_end - b.train_end << '\t'
          << b.size - b.valid_end << '\n';
    }
  }
  {
    auto out = open_out(dir / kBundleStats);
    out << "users\t" << stats.users << "\npois\t" << stats.pois << "\ncheckins\t" << stats.checkins
        << "\navg_checkins\t" << format_double(stats.avg_checkins) << "\navg_user_items\t"
        << format_double(stats.avg_user_items) << "\navg_poi_words\t"
        << format_double(stats.avg_poi_words) << '\n';
  }
}

void check_vocab(const Model& model, const Dataset& data) {
  bool ok = model.vocab.users.size() == data.users.size() &&
            model.vocab.pois.size() == data.pois.size() &&
            model.vocab.poi_words == data.poi_words && model.vocab.user_items == data.user_items;
  for (std::size_t u = 0; ok && u < data.users.size(); ++u) ok = model.vocab.users[u] == data.users[u].id;
  for (std::size_t q = 0; ok && q < data.pois.size(); ++q) ok = model.vocab.pois[q] == data.pois[q].id;
  if (!ok) throw DataError("model archive vocabulary does not match the dataset bundle");
}

EmbeddingTable load_pretrained(const fs::path& path, const std::vector<std::string>& expected_ids,
                               int dim) {
  if (!fs::exists(path)) {
    throw ConfigError(path.string() + " not found; run pretrain first or set pretrained=false");
  }
  std::vector<std::string> ids;
  auto table = load_embedding_table(path, &ids);
  if (ids != expected_ids) throw DataError(path.string() + " does not match the dataset vocabulary");
  if (table.dim() != dim) {
    throw ConfigError(path.string() + " has dimension " + std::to_string(table.dim()) +
                      " but dim=" + std::to_string(dim));
  }
  return table;
}

void write_report(const fs::path& dir, const EvalReport& report, const Vocabulary& vocab,
                  bool cold) {
  {
    auto out = open_out(dir / "report.tsv");
    const auto n = report.count();
    out << "metric\tvalue\tcount\n";
    out << "acc@1\t" << format_double(report.acc1) << '\t' << n << '\n';
    out << "acc@5\t" << format_double(report.acc5) << '\t' << n << '\n';
    out << "acc@10\t" << format_double(report.acc10) << '\t' << n << '\n';
    out << "map\t" << format_double(report.map) << '\t' << n << '\n';
    if (cold) out << "skipped_users\t" << report.skipped << '\t' << n << '\n';
  }
  auto out = open_out(dir / "ranks.tsv");
  out << "user\tprev_poi\ttarget\ttimestamp\trank\n";
  for (const auto& r : report.records) {
    out << r.user << '\t' << vocab.pois.at(r.prev_poi) << '\t' << vocab.pois.at(r.target) << '\t'
        << r.time << '\t' << r.rank << '\n';
  }
}

}  // namespace

DatasetStats dataset_stats(const Dataset& data) {
  DatasetStats s;
  s.users = data.users.size();
  s.pois = data.pois.size();
  s.checkins = data.checkin_count();
  if (s.users > 0) {
    s.avg_checkins = static_cast<double>(s.checkins) / static_cast<double>(s.users);
    std::size_t items = 0;
    for (const auto& u : data.users) items += u.meta_items.size();
    s.avg_user_items = static_cast<double>(items) / static_cast<double>(s.users);
  }
  if (s.pois > 0) {
    std::size_t words = 0;
    for (const auto& p : data.pois) words += p.meta_items.size();
    s.avg_poi_words = static_cast<double>(words) / static_cast<double>(s.pois);
  }
  return s;
}

Dataset load_bundle(const RunConfig& cfg) {
  const fs::path dir(cfg.dir);
  if (!fs::exists(dir / kBundleCheckins)) {
    throw ConfigError("no dataset bundle in " + dir.string() + "; run preprocess first");
  }
  const auto meta = dir / kBundleUserMeta;
  return load_dataset(dir / kBundleCheckins, dir / kBundlePois,
                      fs::exists(meta) ? std::optional<fs::path>(meta) : std::nullopt, cfg.distance);
}

Model initial_model(const RunConfig& cfg, const Dataset& data) {
  cfg.hp.validate();
  Model model;
  model.hp = cfg.hp;
  for (const auto& u : data.users) {
    model.vocab.users.push_back(u.id);
    model.meta.user_items.push_back(u.meta_items);
  }
  for (const auto& p : data.pois) {
    model.vocab.pois.push_back(p.id);
    model.meta.poi_items.push_back(p.meta_items);
  }
  model.vocab.poi_words = data.poi_words;
  model.vocab.user_items = data.user_items;

  const ModelShape shape{static_cast<Index>(data.users.size()), static_cast<Index>(data.pois.size()),
                         static_cast<Index>(data.user_items.size()),
                         static_cast<Index>(data.poi_words.size()), cfg.hp.dim};
  model.params = random_parameters(shape, cfg.seed);
  if (cfg.pretrained) {
    const fs::path dir(cfg.dir);
    model.params.pois = load_pretrained(dir / kPoiEmbeddings, model.vocab.pois, cfg.hp.dim);
    model.params.users = load_pretrained(dir / kUserEmbeddings, model.vocab.users, cfg.hp.dim);
  }
  return model;
}

DatasetStats cmd_preprocess(const RunConfig& cfg, std::ostream& log) {
  if (cfg.checkins.empty() || cfg.pois.empty()) {
    throw ConfigError("preprocess needs both checkins and pois input files");
  }
  const auto raw_checkins = read_checkins(cfg.checkins);
  const auto raw_pois = read_pois(cfg.pois);
  const auto raw_users = cfg.user_meta.empty() ? std::vector<RawUser>{} : read_user_meta(cfg.user_meta);
  const auto full = build_dataset(raw_checkins, raw_pois, raw_users, cfg.distance);
  const auto data = filter_activity(full, cfg.thresholds);
  const auto split = split_chronological(data);
  const auto stats = dataset_stats(data);

  const auto dir = ensure_dir(cfg);
  write_bundle(dir, data, split, stats);

  // Users removed by the activity filter become the cold-start pool.
  std::set<std::string, std::less<>> kept;
  for (const auto& u : data.users) kept.insert(u.id);
  {
    auto out = open_out(dir / kHeldoutCheckins);
    for (std::size_t u = 0; u < full.users.size(); ++u) {
      if (kept.contains(full.users[u].id)) continue;
      for (const auto& c : full.sequences[u]) {
        out << full.users[u].id << '\t' << full.pois[c.poi].id << '\t' << c.timestamp << '\n';
      }
    }
  }
  {
    auto out = open_out(dir / kHeldoutUserMeta);
    for (const auto& u : full.users) {
      if (kept.contains(u.id) || u.meta_items.empty()) continue;
      out << u.id << '\t' << join(u.meta_items, full.user_items) << '\n';
    }
  }
  write_config(dir / "preprocess.config", cfg);

  log << "#User\t#POI\t#Check-in\t#AvgC";
  if (stats.avg_user_items > 0 || stats.avg_poi_words > 0) log << "\t#Avg(A_u)\t#Avg(A_q)";
  log << '\n' << stats.users << '\t' << stats.pois << '\t' << stats.checkins << '\t' << std::fixed
      << std::setprecision(2) << stats.avg_checkins;
  if (stats.avg_user_items > 0 || stats.avg_poi_words > 0) {
    log << '\t' << stats.avg_user_items << '\t' << stats.avg_poi_words;
  }
  log << std::defaultfloat << std::setprecision(6) << '\n';
  return stats;
}

void cmd_pretrain(const RunConfig& cfg, std::ostream& log) {
  const auto data = load_bundle(cfg);
  const auto split = split_chronological(data);
  WalkConfig walk = cfg.walk;
  walk.seed = cfg.seed;
  walk.threads = cfg.threads;
  walk.validate();

  const auto graph = make_transition_graph(data, split, cfg.distance, walk.rho > 0.0,
                                           cfg.geo_pair_cap, cfg.seed);
  log << "walks: rho=" << walk.rho << " (" << (walk.rho > 0.0 ? "geo/transition mixture" : "transitions only")
      << "), " << walk.walks_per_node << " per POI, length " << walk.walk_length << '\n';
  if (graph.geo) {
    log << "distance stats: mean=" << graph.geo->mean << " stddev=" << graph.geo->stddev << '\n';
  }
  const auto walks = generate_walks(graph, walk);

  const auto dir = ensure_dir(cfg);
  std::vector<std::string> poi_ids;
  for (const auto& p : data.pois) poi_ids.push_back(p.id);
  std::vector<std::string> user_ids;
  for (const auto& u : data.users) user_ids.push_back(u.id);
  save_walks(dir / kWalks, walks, poi_ids);

  SkipGramConfig sg = cfg.skipgram;
  sg.dim = cfg.hp.dim;
  sg.seed = cfg.seed;
  const auto result = train_skipgram(walks, data.pois.size(), sg);
  save_embedding_table(dir / kPoiEmbeddings, result.embeddings, poi_ids);
  save_embedding_table(dir / kUserEmbeddings, init_user_embeddings(data, split, result.embeddings),
                       user_ids);
  {
    auto out = open_out(dir / "skipgram_loss.tsv");
    out << "epoch\tloss\n";
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      out << e + 1 << '\t' << format_double(result.epoch_loss[e]) << '\n';
    }
  }
  write_config(dir / "pretrain.config", cfg);
  log << "skipgram loss: " << result.epoch_loss.front() << " -> " << result.epoch_loss.back() << '\n';
}

TrainResult cmd_train(const RunConfig& cfg, std::ostream& log) {
  const auto data = load_bundle(cfg);
  const auto split = split_chronological(data);
  Model model = initial_model(cfg, data);
  TrainConfig tc = cfg.train;
  tc.shuffle_seed = cfg.seed;

  const auto instances = training_instances(data, split);
  const auto valid = segment_instances(data, split, Segment::kValidation);
  const auto dir = ensure_dir(cfg);
  const int threads = cfg.threads;
  auto validator = [&valid, threads](const Model& m) { return validation_map(m, valid, threads); };
  auto on_epoch = [&](const EpochRecord& rec, const Model& m) {
    log << "epoch " << rec.epoch << "  loss " << rec.train_loss << "  valid MAP " << rec.valid_map
        << '\n';
    if (cfg.checkpoints) {
      save_model(dir / ("model.epoch" + std::to_string(rec.epoch) + ".txt"), m);
    }
  };
  auto result = train(model, instances, validator, tc, on_epoch);

  model.params = result.best;
  save_model(cfg.model_path(), model);
  {
    auto out = open_out(dir / kHistory);
    out << "epoch\ttrain_loss\tvalid_map\tseconds\n";
    for (const auto& rec : result.history) {
      out << rec.epoch << '\t' << format_double(rec.train_loss) << '\t'
          << format_double(rec.valid_map) << '\t' << std::fixed << std::setprecision(3)
          << rec.seconds << std::defaultfloat << '\n';
    }
  }
  write_config(dir / "train.config", cfg);
  log << "best epoch " << result.best_epoch << " (valid MAP " << result.best_valid_map << ")\n";
  return result;
}

EvalReport cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const auto model = load_model(cfg.model_path());
  EvalReport report;
  const bool cold = cfg.segment == "coldstart";
  if (cold) {
    if (cfg.heldout.empty()) throw ConfigError("segment coldstart requires the heldout file");
    const auto checkins = read_checkins(cfg.heldout);
    const auto meta = cfg.heldout_meta.empty() ? std::vector<RawUser>{} : read_user_meta(cfg.heldout_meta);
    std::size_t dropped = 0;
    const auto users = make_cold_users(checkins, meta, model.vocab, &dropped);
    if (dropped > 0) {
      log << "warning: dropped " << dropped << " held-out meta items unknown to the model\n";
    }
    report = cold_start_eval(model, users, cfg.seed, cfg.cold_users);
  } else {
    const auto segment = parse_segment(cfg.segment);
    if (segment == Segment::kTrain) throw ConfigError("evaluate supports validation, test or coldstart");
    const auto data = load_bundle(cfg);
    check_vocab(model, data);
    report = evaluate(model, data, split_chronological(data), segment, cfg.threads);
  }

  const auto out_dir = ensure_dir(cfg) / cfg.segment;
  fs::create_directories(out_dir);
  write_report(out_dir, report, model.vocab, cold);
  write_config(out_dir / "evaluate.config", cfg);
  log << cfg.segment << ": n=" << report.count() << " acc@1=" << report.acc1
      << " acc@5=" << report.acc5 << " acc@10=" << report.acc10 << " MAP=" << report.map << '\n';
  if (cold) log << "skipped users: " << report.skipped << '\n';
  return report;
}

std::vector<Recommendation> cmd_recommend(const RunConfig& cfg, const RecommendRequest& req,
                                          std::ostream& out, std::ostream& log) {
  const auto model = load_model(cfg.model_path());
  const auto prev = model.vocab.find_poi(req.prev_poi);
  if (!prev) throw DataError("unknown previous POI '" + req.prev_poi + "'");

  QueryContext ctx{UserQuery::none(), *prev, req.prev_time, req.time};
  if (!req.cold_user) {
    const auto user = model.vocab.find_user(req.user);
    if (!user) throw DataError("unknown user '" + req.user + "'; use --cold-user with --meta items");
    ctx.user = UserQuery::trained(*user);
  } else {
    std::vector<int> items;
    for (const auto& item : req.meta_items) {
      if (auto id = model.vocab.find_user_item(item)) {
        items.push_back(*id);
      } else {
        log << "warning: dropping unknown meta item '" << item << "'\n";
      }
    }
    if (!items.empty()) ctx.user = UserQuery::meta_only(std::move(items));
  }

  const auto recs = recommend_topk(ctx, model, req.k);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    out << i + 1 << '\t' << model.vocab.pois[recs[i].poi] << '\t' << format_double(recs[i].score)
        << '\n';
  }
  return recs;
}

void cmd_interpret(const RunConfig& cfg, std::ostream& log) {
  const auto model = load_model(cfg.model_path());
  if (!model.hp.flags.use_meta || model.params.poi_meta.size() == 0) {
    throw DataError("model has no POI meta-data vocabulary to interpret");
  }
  const auto path = ensure_dir(cfg) / "dims.txt";
  auto out = open_out(path);
  std::size_t empty = 0;
  for (int i = 0; i < model.hp.dim; ++i) {
    out << "dimension " << i << '\n';
    const auto words = dimension_keywords(i, cfg.top_words, model);
    if (words.empty()) ++empty;
    for (const auto& w : words) {
      out << "  " << model.vocab.poi_words[w.word] << '\t' << format_double(w.score) << '\n';
    }
  }
  if (empty > 0) log << "warning: every word has a zero contribution vector\n";
  log << "wrote " << path.string() << '\n';
}

}  // namespace nextpoi
