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

#include "nextpoi/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace nextpoi {
namespace {

constexpr std::string_view kMagic = "nextpoi-model 1";

double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("malformed number '" + std::string(text) + "' in " + std::string(what));
  }
  return value;
}

std::int64_t parse_int(std::string_view text, std::string_view what) {
  std::int64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError("malformed integer '" + std::string(text) + "' in " + std::string(what));
  }
  return value;
}

std::vector<std::string> index_ids(Index n) {
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

void write_matrix(std::ostream& out, std::string_view name, const Matrix& m) {
  out << "[tensor " << name << "]\n";
  write_embedding_table(out, EmbeddingTable(m), index_ids(m.rows()));
}

void write_vector(std::ostream& out, std::string_view name, const Vector& v) {
  out << "[tensor " << name << "]\n";
  const std::string id(name);
  write_embedding_table(out, EmbeddingTable(Matrix(v.transpose())), std::span(&id, 1));
}

void write_memberships(std::ostream& out, std::string_view name,
                       const std::vector<std::vector<int>>& sets,
                       const std::vector<std::string>& owners,
                       const std::vector<std::string>& items) {
  out << "[meta " << name << "]\n" << sets.size() << "\n";
  for (std::size_t i = 0; i < sets.size(); ++i) {
    out << owners.at(i) << '\t';
    for (std::size_t k = 0; k < sets[i].size(); ++k) {
      if (k > 0) out << ',';
      out << items.at(sets[i][k]);
    }
    out << '\n';
  }
}

std::string expect_line(std::istream& in, std::string_view what) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("model archive truncated before " + std::string(what));
  return line;
}

void expect_header(std::istream& in, const std::string& header) {
  const auto line = expect_line(in, header);
  if (line != header) throw DataError("model archive: expected '" + header + "', got '" + line + "'");
}

std::vector<std::vector<int>> read_memberships(std::istream& in, std::string_view name,
                                               const std::vector<std::string>& owners,
                                               const std::vector<std::string>& items) {
  expect_header(in, "[meta " + std::string(name) + "]");
  const auto count = parse_int(expect_line(in, "membership count"), "membership count");
  if (count != static_cast<std::int64_t>(owners.size())) {
    throw DataError("model archive: " + std::string(name) + " membership count mismatch");
  }
  std::map<std::string, int, std::less<>> item_index;
  for (std::size_t i = 0; i < items.size(); ++i) item_index.emplace(items[i], static_cast<int>(i));
  std::vector<std::vector<int>> sets(owners.size());
  for (std::size_t i = 0; i < owners.size(); ++i) {
    const auto line = expect_line(in, "membership row");
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.substr(0, tab) != owners[i]) {
      throw DataError("model archive: membership row " + std::to_string(i) + " does not match owner " +
                      owners[i]);
    }
    std::stringstream list(line.substr(tab + 1));
    std::string item;
    while (std::getline(list, item, ',')) {
      if (item.empty()) continue;
      auto it = item_index.find(item);
      if (it == item_index.end()) throw DataError("model archive: unknown meta item " + item);
      sets[i].push_back(it->second);
    }
  }
  return sets;
}

Matrix read_square(std::istream& in, std::string_view name, Index rows, Index dim) {
  expect_header(in, "[tensor " + std::string(name) + "]");
  auto table = read_embedding_table(in);
  if (table.size() != rows || table.dim() != dim) {
    throw DataError("model archive: tensor " + std::string(name) + " has wrong shape");
  }
  return std::move(table.values);
}

EmbeddingTable read_named_table(std::istream& in, std::string_view name, int dim,
                                std::vector<std::string>& ids) {
  expect_header(in, "[tensor " + std::string(name) + "]");
  auto table = read_embedding_table(in, &ids);
  if (table.dim() != dim) throw DataError("model archive: tensor " + std::string(name) + " has wrong dim");
  return table;
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw DataError("model archive: malformed boolean '" + v + "'");
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void write_embedding_table(std::ostream& out, const EmbeddingTable& table,
                           std::span<const std::string> ids) {
  if (static_cast<Index>(ids.size()) != table.size()) {
    throw std::invalid_argument("embedding table id count does not match row count");
  }
  out << table.size() << ' ' << table.dim() << '\n';
  for (Index i = 0; i < table.size(); ++i) {
    const auto& id = ids[static_cast<std::size_t>(i)];
    if (id.empty() || id.find_first_of(" \t\n\r") != std::string::npos) {
      throw DataError("id '" + id + "' cannot be written to an embedding table (whitespace)");
    }
    out << id;
    for (Index j = 0; j < table.dim(); ++j) out << ' ' << format_double(table.values(i, j));
    out << '\n';
  }
}

EmbeddingTable read_embedding_table(std::istream& in, std::vector<std::string>* ids) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("embedding table: missing header");
  std::istringstream header(line);
  std::string count_text;
  std::string dim_text;
  if (!(header >> count_text >> dim_text)) throw DataError("embedding table: malformed header");
  const auto count = parse_int(count_text, "embedding table header");
  const auto dim = parse_int(dim_text, "embedding table header");
  if (count < 0 || dim < 1) throw DataError("embedding table: invalid shape");
  EmbeddingTable table(count, dim);
  if (ids != nullptr) ids->clear();
  for (Index i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw DataError("embedding table: truncated at row " + std::to_string(i));
    std::istringstream row(line);
    std::string id;
    row >> id;
    if (ids != nullptr) ids->push_back(id);
    std::string value;
    for (Index j = 0; j < dim; ++j) {
      if (!(row >> value)) {
        throw DataError("embedding table: row " + std::to_string(i) + " has fewer than " +
                        std::to_string(dim) + " values");
      }
      table.values(i, j) = parse_double(value, "embedding table row");
    }
    if (row >> value) throw DataError("embedding table: row " + std::to_string(i) + " has extra values");
  }
  if (!table.all_finite()) throw DataError("embedding table contains non-finite values");
  return table;
}

void save_embedding_table(const std::filesystem::path& path, const EmbeddingTable& table,
                          std::span<const std::string> ids) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_embedding_table(out, table, ids);
}

EmbeddingTable load_embedding_table(const std::filesystem::path& path,
                                    std::vector<std::string>* ids) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_embedding_table(in, ids);
}

void save_walks(const std::filesystem::path& path, const std::vector<Walk>& walks,
                std::span<const std::string> poi_ids) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& walk : walks) {
    for (std::size_t i = 0; i < walk.size(); ++i) {
      if (i > 0) out << ' ';
      out << poi_ids[walk[i]];
    }
    out << '\n';
  }
}

void write_model(std::ostream& out, const Model& model) {
  const auto& hp = model.hp;
  const auto& p = model.params;
  out << kMagic << '\n' << "[manifest]\n";
  out << "dim=" << hp.dim << '\n';
  out << "alpha=" << format_double(hp.alpha) << '\n';
  out << "beta=" << format_double(hp.beta) << '\n';
  out << "interval_hours=" << format_double(hp.interval_hours) << '\n';
  out << "lambda=" << format_double(hp.lambda) << '\n';
  out << "learning_rate=" << format_double(hp.learning_rate) << '\n';
  out << "use_meta=" << (hp.flags.use_meta ? 1 : 0) << '\n';
  out << "use_interval=" << (hp.flags.use_interval ? 1 : 0) << '\n';
  out << "use_timeslot=" << (hp.flags.use_timeslot ? 1 : 0) << '\n';
  out << "slots=" << kTimeSlots << '\n';
  out << "tz_offset_seconds=" << hp.tz_offset_seconds << '\n';
  out << "users=" << p.users.size() << '\n';
  out << "pois=" << p.pois.size() << '\n';
  out << "user_items=" << p.user_meta.size() << '\n';
  out << "poi_words=" << p.poi_meta.size() << '\n';
  out << "[end]\n";

  out << "[tensor U]\n";
  write_embedding_table(out, p.users, model.vocab.users);
  out << "[tensor Q]\n";
  write_embedding_table(out, p.pois, model.vocab.pois);
  out << "[tensor M_user]\n";
  write_embedding_table(out, p.user_meta, model.vocab.user_items);
  out << "[tensor M_poi]\n";
  write_embedding_table(out, p.poi_meta, model.vocab.poi_words);
  write_matrix(out, "W0", p.w0);
  write_matrix(out, "W_pi", p.w_pi);
  write_matrix(out, "W1", p.w1);
  write_matrix(out, "W2", p.w2);
  write_matrix(out, "W3", p.w3);
  write_vector(out, "b1", p.b1);
  write_vector(out, "b2", p.b2);
  write_vector(out, "b3", p.b3);
  write_matrix(out, "B", p.slot_bias);
  write_memberships(out, "poi", model.meta.poi_items, model.vocab.pois, model.vocab.poi_words);
  write_memberships(out, "user", model.meta.user_items, model.vocab.users, model.vocab.user_items);
}

Model read_model(std::istream& in) {
  if (expect_line(in, "magic") != kMagic) throw DataError("not a nextpoi model archive");
  expect_header(in, "[manifest]");
  std::map<std::string, std::string> manifest;
  for (auto line = expect_line(in, "[end]"); line != "[end]"; line = expect_line(in, "[end]")) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("model archive: malformed manifest line '" + line + "'");
    manifest[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = manifest.find(key);
    if (it == manifest.end()) throw DataError("model archive: manifest lacks '" + key + "'");
    return it->second;
  };

  Model model;
  auto& hp = model.hp;
  hp.dim = static_cast<int>(parse_int(get("dim"), "dim"));
  hp.alpha = parse_double(get("alpha"), "alpha");
  hp.beta = parse_double(get("beta"), "beta");
  hp.interval_hours = parse_double(get("interval_hours"), "interval_hours");
  hp.lambda = parse_double(get("lambda"), "lambda");
  hp.learning_rate = parse_double(get("learning_rate"), "learning_rate");
  hp.flags.use_meta = parse_bool(get("use_meta"));
  hp.flags.use_interval = parse_bool(get("use_interval"));
  hp.flags.use_timeslot = parse_bool(get("use_timeslot"));
  hp.tz_offset_seconds = parse_int(get("tz_offset_seconds"), "tz_offset_seconds");
  if (parse_int(get("slots"), "slots") != kTimeSlots) throw DataError("model archive: unsupported slot count");
  hp.validate();

  auto& p = model.params;
  auto& v = model.vocab;
  const Index d = hp.dim;
  p.users = read_named_table(in, "U", hp.dim, v.users);
  p.pois = read_named_table(in, "Q", hp.dim, v.pois);
  p.user_meta = read_named_table(in, "M_user", hp.dim, v.user_items);
  p.poi_meta = read_named_table(in, "M_poi", hp.dim, v.poi_words);
  if (p.users.size() != parse_int(get("users"), "users") ||
      p.pois.size() != parse_int(get("pois"), "pois") ||
      p.user_meta.size() != parse_int(get("user_items"), "user_items") ||
      p.poi_meta.size() != parse_int(get("poi_words"), "poi_words")) {
    throw DataError("model archive: tensor sizes disagree with the manifest");
  }
  p.w0 = read_square(in, "W0", d, d);
  p.w_pi = read_square(in, "W_pi", d, d);
  p.w1 = read_square(in, "W1", d, d);
  p.w2 = read_square(in, "W2", d, d);
  p.w3 = read_square(in, "W3", d, d);
  p.b1 = read_square(in, "b1", 1, d).transpose();
  p.b2 = read_square(in, "b2", 1, d).transpose();
  p.b3 = read_square(in, "b3", 1, d).transpose();
  p.slot_bias = read_square(in, "B", kTimeSlots, d);
  model.meta.poi_items = read_memberships(in, "poi", v.pois, v.poi_words);
  model.meta.user_items = read_memberships(in, "user", v.users, v.user_items);
  return model;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_model(out, model);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model archive " + path.string());
  return read_model(in);
}

}  // namespace nextpoi
