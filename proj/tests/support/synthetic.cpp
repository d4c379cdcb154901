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

#include "synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

namespace nextpoi::testing {
namespace {

constexpr std::int64_t kEpoch = 1577836800;  // 2020-01-01T00:00:00Z

std::string padded(char prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%03d", prefix, i);
  return buf;
}

std::vector<int> permutation(int n, std::mt19937_64& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  shuffle(p, rng);
  return p;
}

void add_meta(Corpus& c, const CorpusSpec& spec, std::mt19937_64& rng) {
  for (int q = 0; q < spec.pois; ++q) {
    RawPoi p{poi_name(q), uniform(rng, 0.0, 10.0), uniform(rng, 0.0, 10.0), {}};
    if (spec.words > 0) p.words.push_back("w" + std::to_string(q % spec.words));
    c.pois.push_back(std::move(p));
  }
  for (int u = 0; u < spec.users && spec.user_items > 0; ++u) {
    c.users.push_back({user_name(u), {"i" + std::to_string(u % spec.user_items)}});
  }
}

std::int64_t next_time(std::int64_t t, std::mt19937_64& rng) {
  return t + 3600 * static_cast<std::int64_t>(1 + uniform_index(rng, 24)) +
         static_cast<std::int64_t>(uniform_index(rng, 3600));
}

}  // namespace

std::string poi_name(int i) { return padded('p', i); }
std::string user_name(int i) { return padded('u', i); }

std::vector<int> planted_successors(const CorpusSpec& spec) {
  std::mt19937_64 rng(derive_seed(spec.seed, 11, 0));
  // A single cycle keeps every POI on every user's path.
  const auto order = permutation(spec.pois, rng);
  std::vector<int> next(static_cast<std::size_t>(spec.pois));
  for (std::size_t i = 0; i < order.size(); ++i) next[order[i]] = order[(i + 1) % order.size()];
  return next;
}

Corpus planted_markov(const CorpusSpec& spec) {
  Corpus c;
  std::mt19937_64 rng(derive_seed(spec.seed, 12, 0));
  add_meta(c, spec, rng);
  const auto next = planted_successors(spec);
  for (int u = 0; u < spec.users; ++u) {
    int q = static_cast<int>(uniform_index(rng, spec.pois));
    std::int64_t t = kEpoch + static_cast<std::int64_t>(uniform_index(rng, 86400));
    for (int i = 0; i < spec.length; ++i) {
      c.checkins.push_back({user_name(u), poi_name(q), t});
      t = next_time(t, rng);
      if (uniform01(rng) < spec.dominant) {
        q = next[q];
      } else {
        int other = static_cast<int>(uniform_index(rng, spec.pois - 1));
        if (other >= next[q]) ++other;
        q = other;
      }
    }
  }
  return c;
}

Corpus two_regime(const CorpusSpec& spec) {
  Corpus c;
  std::mt19937_64 rng(derive_seed(spec.seed, 13, 0));
  add_meta(c, spec, rng);
  const int half = spec.pois / 2;
  const auto day = permutation(half, rng);
  const auto night = permutation(spec.pois - half, rng);
  for (int u = 0; u < spec.users; ++u) {
    int q = static_cast<int>(uniform_index(rng, spec.pois));
    std::int64_t t = kEpoch + static_cast<std::int64_t>(uniform_index(rng, 86400));
    for (int i = 0; i < spec.length; ++i) {
      c.checkins.push_back({user_name(u), poi_name(q), t});
      t = next_time(t, rng);
      if (time_slot(t, 0) < 12) {
        q = day[q % half];
      } else {
        q = half + night[q % (spec.pois - half)];
      }
    }
  }
  return c;
}

Dataset to_dataset(const Corpus& corpus) {
  return build_dataset(corpus.checkins, corpus.pois, corpus.users, DistanceMode::kPlanar);
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream checkins(dir / "checkins.tsv");
  for (const auto& c : corpus.checkins) {
    checkins << c.user_id << '\t' << c.poi_id << '\t' << c.timestamp << '\n';
  }
  std::ofstream pois(dir / "pois.tsv");
  pois.precision(17);
  for (const auto& p : corpus.pois) {
    pois << p.id << '\t' << p.latitude << '\t' << p.longitude;
    for (std::size_t i = 0; i < p.words.size(); ++i) pois << (i == 0 ? '\t' : ',') << p.words[i];
    pois << '\n';
  }
  std::ofstream users(dir / "user_meta.tsv");
  for (const auto& u : corpus.users) {
    users << u.id;
    for (std::size_t i = 0; i < u.items.size(); ++i) users << (i == 0 ? '\t' : ',') << u.items[i];
    users << '\n';
  }
}

Model toy_model(const ToySpec& spec) {
  std::mt19937_64 rng(derive_seed(spec.seed, 14, 0));
  Model m;
  m.hp.dim = spec.dim;
  m.params = random_parameters({spec.users, spec.pois, spec.user_items, spec.poi_words, spec.dim},
                               spec.seed, spec.scale);
  auto pick = [&](int vocab, bool none) {
    std::vector<int> items;
    if (none || vocab == 0) return items;
    const int n = 1 + static_cast<int>(uniform_index(rng, 3));
    for (int i = 0; i < n; ++i) items.push_back(static_cast<int>(uniform_index(rng, vocab)));
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    return items;
  };
  for (int q = 0; q < spec.pois; ++q) {
    m.vocab.pois.push_back(poi_name(q));
    m.meta.poi_items.push_back(pick(spec.poi_words, q == spec.pois - 1));
  }
  for (int u = 0; u < spec.users; ++u) {
    m.vocab.users.push_back(user_name(u));
    m.meta.user_items.push_back(pick(spec.user_items, u == spec.users - 1));
  }
  for (int w = 0; w < spec.poi_words; ++w) m.vocab.poi_words.push_back("w" + std::to_string(w));
  for (int i = 0; i < spec.user_items; ++i) m.vocab.user_items.push_back("i" + std::to_string(i));
  return m;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("nextpoi_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace nextpoi::testing
