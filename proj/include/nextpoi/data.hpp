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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nextpoi/common.hpp"

namespace nextpoi {

enum class DistanceMode {
  kHaversine,  // great-circle meters from (latitude, longitude) degrees
  kPlanar,     // Euclidean over raw (latitude, longitude) values; synthetic data
};

DistanceMode parse_distance_mode(std::string_view name);
std::string_view to_string(DistanceMode mode);

struct Poi {
  std::string id;
  double latitude = 0.0;
  double longitude = 0.0;
  std::vector<int> meta_items;  // dense ids into Dataset::poi_words, ascending

  friend bool operator==(const Poi&, const Poi&) = default;
};

struct UserRecord {
  std::string id;
  std::vector<int> meta_items;  // dense ids into Dataset::user_items, ascending

  friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

struct CheckIn {
  int user = 0;
  int poi = 0;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC

  friend bool operator==(const CheckIn&, const CheckIn&) = default;
};

// Check-in corpus with dense ids. Every id table is sorted by the original
// string id, so dense ids are stable across reloads of the same data.
struct Dataset {
  std::vector<UserRecord> users;
  std::vector<Poi> pois;
  std::vector<std::string> poi_words;
  std::vector<std::string> user_items;
  // sequences[u] is user u's history, ordered by timestamp (ties keep input order).
  std::vector<std::vector<CheckIn>> sequences;

  std::optional<int> find_user(std::string_view id) const;
  std::optional<int> find_poi(std::string_view id) const;
  std::optional<int> find_poi_word(std::string_view word) const;
  std::optional<int> find_user_item(std::string_view item) const;
  std::size_t checkin_count() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// String-keyed records as they appear in the input files.
struct RawCheckIn {
  std::string user_id;
  std::string poi_id;
  std::int64_t timestamp = 0;
};

struct RawPoi {
  std::string id;
  double latitude = 0.0;
  double longitude = 0.0;
  std::vector<std::string> words;
};

struct RawUser {
  std::string id;
  std::vector<std::string> items;
};

std::vector<RawCheckIn> read_checkins(const std::filesystem::path& path);
std::vector<RawPoi> read_pois(const std::filesystem::path& path);
std::vector<RawUser> read_user_meta(const std::filesystem::path& path);

// Assembles a Dataset. Check-ins referencing a POI without a record, or a POI
// listed twice with different coordinates, raise DataError. In haversine mode
// coordinates must be valid degrees.
Dataset build_dataset(std::span<const RawCheckIn> checkins, std::span<const RawPoi> pois,
                      std::span<const RawUser> users, DistanceMode mode = DistanceMode::kHaversine);

Dataset load_dataset(const std::filesystem::path& checkins, const std::filesystem::path& pois,
                     const std::optional<std::filesystem::path>& user_meta,
                     DistanceMode mode = DistanceMode::kHaversine);

struct ActivityThresholds {
  int min_user_checkins = 10;
  int min_poi_users = 10;
};

// Repeatedly drops users with too few check-ins and POIs with too few distinct
// visitors until both thresholds hold at once, then re-densifies all ids.
Dataset filter_activity(const Dataset& data, ActivityThresholds thresholds = {});

enum class Segment { kTrain, kValidation, kTest };

Segment parse_segment(std::string_view name);
std::string_view to_string(Segment segment);

// Per-user 70/10/20 chronological partition: [0, train_end) is training,
// [train_end, valid_end) validation, [valid_end, size) test.
struct SegmentBounds {
  std::size_t train_end = 0;
  std::size_t valid_end = 0;
  std::size_t size = 0;

  friend bool operator==(const SegmentBounds&, const SegmentBounds&) = default;
};

struct Split {
  std::vector<SegmentBounds> users;

  // Half-open index range [first, last) of `segment` within user u's sequence.
  std::pair<std::size_t, std::size_t> range(int user, Segment segment) const;
};

SegmentBounds split_bounds(std::size_t length);
Split split_chronological(const Dataset& data);

std::span<const CheckIn> segment_view(const Dataset& data, const Split& split, int user,
                                      Segment segment);

// Sparse consecutive-visit counts f(a, b).
class TransitionCounts {
 public:
  TransitionCounts() = default;
  explicit TransitionCounts(std::size_t poi_count) : rows_(poi_count) {}

  void add(int from, int to, std::int64_t count = 1);
  std::int64_t count(int from, int to) const;
  const std::map<int, std::int64_t>& row(int from) const { return rows_.at(from); }
  std::int64_t row_total(int from) const;
  std::int64_t total() const;
  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::map<int, std::int64_t>> rows_;
};

// Counts pairs inside each user's training segment only.
TransitionCounts build_transition_counts(const Dataset& data, const Split& split);

struct GeoStats {
  double mean = 0.0;
  double stddev = 0.0;
};

double poi_distance(const Poi& a, const Poi& b, DistanceMode mode);

// Mean and population standard deviation of the distance over all unordered
// pairs of distinct POIs. With pair_cap > 0 and more pairs than that, a seeded
// uniform sample of pair_cap pairs is used instead.
GeoStats compute_geo_stats(std::span<const Poi> pois, DistanceMode mode,
                           std::size_t pair_cap = 0, std::uint64_t seed = 0);

// Hour-of-day slot in [0, 24) of a UTC timestamp shifted by the dataset offset.
int time_slot(std::int64_t timestamp, std::int64_t tz_offset_seconds);

}  // namespace nextpoi
