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

#include "nextpoi/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace nextpoi {
namespace {

constexpr double kEarthRadiusMeters = 6371008.8;

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string where(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no) + ": ";
}

template <class Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(std::string_view(line), line_no);
  }
}

std::int64_t parse_int(std::string_view text, const std::string& ctx) {
  std::int64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw DataError(ctx + "invalid integer '" + std::string(text) + "'");
  }
  return value;
}

double parse_double(std::string_view text, const std::string& ctx) {
  // from_chars for double is missing on older libstdc++; strtod on a copy.
  const std::string copy(text);
  char* end = nullptr;
  const double value = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size() || !std::isfinite(value)) {
    throw DataError(ctx + "invalid number '" + copy + "'");
  }
  return value;
}

std::vector<std::string> parse_list(std::string_view text) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  for (auto item : split_fields(text, ',')) {
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

template <class T>
std::optional<int> find_sorted(const std::vector<T>& table, std::string_view id,
                               const std::string& (*key)(const T&)) {
  auto it = std::lower_bound(table.begin(), table.end(), id,
                             [key](const T& rec, std::string_view v) { return key(rec) < v; });
  if (it == table.end() || key(*it) != id) return std::nullopt;
  return static_cast<int>(it - table.begin());
}

const std::string& string_key(const std::string& s) { return s; }
const std::string& poi_key(const Poi& p) { return p.id; }
const std::string& user_key(const UserRecord& u) { return u.id; }

std::vector<int> densify(const std::vector<std::string>& items,
                         const std::vector<std::string>& vocab) {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    auto it = std::lower_bound(vocab.begin(), vocab.end(), item);
    out.push_back(static_cast<int>(it - vocab.begin()));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Dataset assemble(std::span<const RawCheckIn> checkins, std::span<const RawPoi> pois,
                 std::span<const RawUser> users, std::optional<DistanceMode> validate_mode) {
  std::map<std::string, RawPoi, std::less<>> poi_table;
  for (const auto& p : pois) {
    if (p.id.empty()) throw DataError("POI record with empty id");
    if (validate_mode == DistanceMode::kHaversine &&
        (p.latitude < -90.0 || p.latitude > 90.0 || p.longitude < -180.0 || p.longitude > 180.0)) {
      throw DataError("POI " + p.id + " has coordinates outside valid degree ranges");
    }
    auto [it, inserted] = poi_table.try_emplace(p.id, p);
    if (!inserted) {
      if (it->second.latitude != p.latitude || it->second.longitude != p.longitude) {
        throw DataError("POI " + p.id + " listed twice with conflicting coordinates");
      }
      it->second.words.insert(it->second.words.end(), p.words.begin(), p.words.end());
    }
  }

  std::map<std::string, std::vector<std::string>, std::less<>> user_meta;
  for (const auto& u : users) {
    auto& items = user_meta[u.id];
    items.insert(items.end(), u.items.begin(), u.items.end());
  }

  std::set<std::string, std::less<>> user_ids;
  std::set<std::string, std::less<>> poi_ids;
  for (const auto& c : checkins) {
    if (c.user_id.empty() || c.poi_id.empty()) throw DataError("check-in with empty id");
    if (c.timestamp <= 0) {
      throw DataError("check-in of user " + c.user_id + " has non-positive timestamp");
    }
    if (!poi_table.contains(c.poi_id)) {
      throw DataError("check-in references unknown POI " + c.poi_id);
    }
    user_ids.insert(c.user_id);
    poi_ids.insert(c.poi_id);
  }

  Dataset data;
  std::set<std::string> words;
  for (const auto& id : poi_ids) {
    const auto& raw = poi_table.find(id)->second;
    words.insert(raw.words.begin(), raw.words.end());
  }
  data.poi_words.assign(words.begin(), words.end());
  for (const auto& id : poi_ids) {
    const auto& raw = poi_table.find(id)->second;
    data.pois.push_back({id, raw.latitude, raw.longitude, densify(raw.words, data.poi_words)});
  }

  std::set<std::string> items;
  for (const auto& id : user_ids) {
    if (auto it = user_meta.find(id); it != user_meta.end()) {
      items.insert(it->second.begin(), it->second.end());
    }
  }
  data.user_items.assign(items.begin(), items.end());
  for (const auto& id : user_ids) {
    UserRecord rec{id, {}};
    if (auto it = user_meta.find(id); it != user_meta.end()) {
      rec.meta_items = densify(it->second, data.user_items);
    }
    data.users.push_back(std::move(rec));
  }

  data.sequences.resize(data.users.size());
  for (const auto& c : checkins) {
    const int u = *data.find_user(c.user_id);
    const int q = *data.find_poi(c.poi_id);
    data.sequences[u].push_back({u, q, c.timestamp});
  }
  for (auto& seq : data.sequences) {
    std::stable_sort(seq.begin(), seq.end(),
                     [](const CheckIn& a, const CheckIn& b) { return a.timestamp < b.timestamp; });
  }
  return data;
}

}  // namespace

DistanceMode parse_distance_mode(std::string_view name) {
  if (name == "haversine") return DistanceMode::kHaversine;
  if (name == "planar") return DistanceMode::kPlanar;
  throw ConfigError("unknown distance mode '" + std::string(name) + "'");
}

std::string_view to_string(DistanceMode mode) {
  return mode == DistanceMode::kHaversine ? "haversine" : "planar";
}

std::optional<int> Dataset::find_user(std::string_view id) const {
  return find_sorted(users, id, &user_key);
}
std::optional<int> Dataset::find_poi(std::string_view id) const {
  return find_sorted(pois, id, &poi_key);
}
std::optional<int> Dataset::find_poi_word(std::string_view word) const {
  return find_sorted(poi_words, word, &string_key);
}
std::optional<int> Dataset::find_user_item(std::string_view item) const {
  return find_sorted(user_items, item, &string_key);
}

std::size_t Dataset::checkin_count() const {
  std::size_t n = 0;
  for (const auto& seq : sequences) n += seq.size();
  return n;
}

std::vector<RawCheckIn> read_checkins(const std::filesystem::path& path) {
  std::vector<RawCheckIn> out;
  for_each_line(path, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_fields(line, '\t');
    const auto ctx = where(path, line_no);
    if (fields.size() != 3) {
      throw DataError(ctx + "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) throw DataError(ctx + "empty id field");
    const auto ts = parse_int(fields[2], ctx);
    if (ts <= 0) throw DataError(ctx + "timestamp must be positive");
    out.push_back({std::string(fields[0]), std::string(fields[1]), ts});
  });
  return out;
}

std::vector<RawPoi> read_pois(const std::filesystem::path& path) {
  std::vector<RawPoi> out;
  for_each_line(path, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_fields(line, '\t');
    const auto ctx = where(path, line_no);
    if (fields.size() != 3 && fields.size() != 4) {
      throw DataError(ctx + "expected 3 or 4 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw DataError(ctx + "empty POI id");
    RawPoi poi{std::string(fields[0]), parse_double(fields[1], ctx), parse_double(fields[2], ctx), {}};
    if (fields.size() == 4) poi.words = parse_list(fields[3]);
    out.push_back(std::move(poi));
  });
  return out;
}

std::vector<RawUser> read_user_meta(const std::filesystem::path& path) {
  std::vector<RawUser> out;
  for_each_line(path, [&](std::string_view line, std::size_t line_no) {
    const auto fields = split_fields(line, '\t');
    const auto ctx = where(path, line_no);
    if (fields.size() != 1 && fields.size() != 2) {
      throw DataError(ctx + "expected 1 or 2 tab-separated fields, got " +
                      std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw DataError(ctx + "empty user id");
    RawUser user{std::string(fields[0]), {}};
    if (fields.size() == 2) user.items = parse_list(fields[1]);
    out.push_back(std::move(user));
  });
  return out;
}

Dataset build_dataset(std::span<const RawCheckIn> checkins, std::span<const RawPoi> pois,
                      std::span<const RawUser> users, DistanceMode mode) {
  return assemble(checkins, pois, users, mode);
}

Dataset load_dataset(const std::filesystem::path& checkins, const std::filesystem::path& pois,
                     const std::optional<std::filesystem::path>& user_meta, DistanceMode mode) {
  const auto raw_checkins = read_checkins(checkins);
  const auto raw_pois = read_pois(pois);
  const auto raw_users = user_meta ? read_user_meta(*user_meta) : std::vector<RawUser>{};
  return build_dataset(raw_checkins, raw_pois, raw_users, mode);
}

Dataset filter_activity(const Dataset& data, ActivityThresholds thresholds) {
  if (thresholds.min_user_checkins < 1 || thresholds.min_poi_users < 1) {
    throw ConfigError("activity thresholds must be >= 1");
  }
  std::vector<char> keep_user(data.users.size(), 1);
  std::vector<char> keep_poi(data.pois.size(), 1);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::int64_t> user_checkins(data.users.size(), 0);
    std::vector<std::set<int>> poi_users(data.pois.size());
    for (std::size_t u = 0; u < data.sequences.size(); ++u) {
      if (!keep_user[u]) continue;
      for (const auto& c : data.sequences[u]) {
        if (!keep_poi[c.poi]) continue;
        ++user_checkins[u];
        poi_users[c.poi].insert(c.user);
      }
    }
    for (std::size_t u = 0; u < keep_user.size(); ++u) {
      if (keep_user[u] && user_checkins[u] < thresholds.min_user_checkins) {
        keep_user[u] = 0;
        changed = true;
      }
    }
    for (std::size_t q = 0; q < keep_poi.size(); ++q) {
      if (keep_poi[q] && static_cast<int>(poi_users[q].size()) < thresholds.min_poi_users) {
        keep_poi[q] = 0;
        changed = true;
      }
    }
  }

  std::vector<RawCheckIn> checkins;
  for (std::size_t u = 0; u < data.sequences.size(); ++u) {
    if (!keep_user[u]) continue;
    for (const auto& c : data.sequences[u]) {
      if (keep_poi[c.poi]) checkins.push_back({data.users[u].id, data.pois[c.poi].id, c.timestamp});
    }
  }
  if (checkins.empty()) throw DataError("dataset vanished under filter");

  std::vector<RawPoi> pois;
  for (std::size_t q = 0; q < data.pois.size(); ++q) {
    if (!keep_poi[q]) continue;
    const auto& p = data.pois[q];
    RawPoi raw{p.id, p.latitude, p.longitude, {}};
    for (int w : p.meta_items) raw.words.push_back(data.poi_words[w]);
    pois.push_back(std::move(raw));
  }
  std::vector<RawUser> users;
  for (std::size_t u = 0; u < data.users.size(); ++u) {
    if (!keep_user[u]) continue;
    RawUser raw{data.users[u].id, {}};
    for (int m : data.users[u].meta_items) raw.items.push_back(data.user_items[m]);
    users.push_back(std::move(raw));
  }
  return assemble(checkins, pois, users, std::nullopt);
}

Segment parse_segment(std::string_view name) {
  if (name == "train") return Segment::kTrain;
  if (name == "validation" || name == "valid") return Segment::kValidation;
  if (name == "test") return Segment::kTest;
  throw ConfigError("unknown segment '" + std::string(name) + "'");
}

std::string_view to_string(Segment segment) {
  switch (segment) {
    case Segment::kTrain:
      return "train";
    case Segment::kValidation:
      return "validation";
    case Segment::kTest:
      return "test";
  }
  return "?";
}

SegmentBounds split_bounds(std::size_t length) {
  if (length < 3) {
    throw DataError("sequence of length " + std::to_string(length) +
                    " cannot be split into train/validation/test");
  }
  // Integer floors: exact for every length, unlike floor(n * 0.7).
  const std::size_t train = length * 7 / 10;
  const std::size_t valid = length / 10;
  return {train, train + valid, length};
}

Split split_chronological(const Dataset& data) {
  Split split;
  split.users.reserve(data.sequences.size());
  for (std::size_t u = 0; u < data.sequences.size(); ++u) {
    try {
      split.users.push_back(split_bounds(data.sequences[u].size()));
    } catch (const DataError& e) {
      throw DataError("user " + data.users[u].id + ": " + e.what());
    }
  }
  return split;
}

std::pair<std::size_t, std::size_t> Split::range(int user, Segment segment) const {
  const auto& b = users.at(user);
  switch (segment) {
    case Segment::kTrain:
      return {0, b.train_end};
    case Segment::kValidation:
      return {b.train_end, b.valid_end};
    case Segment::kTest:
      return {b.valid_end, b.size};
  }
  return {0, 0};
}

std::span<const CheckIn> segment_view(const Dataset& data, const Split& split, int user,
                                      Segment segment) {
  const auto [first, last] = split.range(user, segment);
  return std::span<const CheckIn>(data.sequences.at(user)).subspan(first, last - first);
}

void TransitionCounts::add(int from, int to, std::int64_t count) {
  rows_.at(from)[to] += count;
}

std::int64_t TransitionCounts::count(int from, int to) const {
  const auto& row = rows_.at(from);
  auto it = row.find(to);
  return it == row.end() ? 0 : it->second;
}

std::int64_t TransitionCounts::row_total(int from) const {
  std::int64_t total = 0;
  for (const auto& [to, c] : rows_.at(from)) total += c;
  return total;
}

std::int64_t TransitionCounts::total() const {
  std::int64_t total = 0;
  for (std::size_t q = 0; q < rows_.size(); ++q) total += row_total(static_cast<int>(q));
  return total;
}

TransitionCounts build_transition_counts(const Dataset& data, const Split& split) {
  TransitionCounts counts(data.pois.size());
  for (std::size_t u = 0; u < data.sequences.size(); ++u) {
    const auto train = segment_view(data, split, static_cast<int>(u), Segment::kTrain);
    for (std::size_t i = 1; i < train.size(); ++i) counts.add(train[i - 1].poi, train[i].poi);
  }
  return counts;
}

double poi_distance(const Poi& a, const Poi& b, DistanceMode mode) {
  if (mode == DistanceMode::kPlanar) {
    return std::hypot(a.latitude - b.latitude, a.longitude - b.longitude);
  }
  constexpr double kRad = std::numbers::pi / 180.0;
  const double lat1 = a.latitude * kRad;
  const double lat2 = b.latitude * kRad;
  const double dlat = lat2 - lat1;
  const double dlon = (b.longitude - a.longitude) * kRad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1) * std::cos(lat2) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusMeters * std::asin(std::min(1.0, std::sqrt(h)));
}

GeoStats compute_geo_stats(std::span<const Poi> pois, DistanceMode mode, std::size_t pair_cap,
                           std::uint64_t seed) {
  const std::size_t n = pois.size();
  if (n < 2) throw DataError("geographic statistics need at least 2 POIs");
  const std::size_t pairs = n * (n - 1) / 2;

  std::vector<double> distances;
  if (pair_cap > 0 && pairs > pair_cap) {
    std::mt19937_64 rng(derive_seed(seed, 0x6e0));
    distances.reserve(pair_cap);
    for (std::size_t k = 0; k < pair_cap; ++k) {
      const auto i = uniform_index(rng, n);
      auto j = uniform_index(rng, n - 1);
      if (j >= i) ++j;
      distances.push_back(poi_distance(pois[i], pois[j], mode));
    }
  } else {
    distances.reserve(pairs);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) distances.push_back(poi_distance(pois[i], pois[j], mode));
    }
  }

  // Sorting makes the sums independent of POI order.
  std::sort(distances.begin(), distances.end());
  double sum = 0.0;
  for (double d : distances) sum += d;
  const double mean = sum / static_cast<double>(distances.size());
  double sq = 0.0;
  for (double d : distances) sq += (d - mean) * (d - mean);
  const double stddev = std::sqrt(sq / static_cast<double>(distances.size()));
  if (!(stddev > 0.0)) {
    throw DataError(
        "POI distances have zero standard deviation; the geographic kernel is undefined. "
        "Set rho=0 to disable the geographic walk term");
  }
  return {mean, stddev};
}

int time_slot(std::int64_t timestamp, std::int64_t tz_offset_seconds) {
  constexpr std::int64_t kDay = 86400;
  const std::int64_t local = ((timestamp + tz_offset_seconds) % kDay + kDay) % kDay;
  return static_cast<int>(local / 3600);
}

}  // namespace nextpoi
