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
#include <optional>
#include <vector>

#include "nextpoi/common.hpp"
#include "nextpoi/data.hpp"

namespace nextpoi {

struct WalkConfig {
  double rho = 0.0;  // weight of the geographic term; 1 - rho goes to transition counts
  int walks_per_node = 50;
  int walk_length = 20;
  std::uint64_t seed = 1;
  int threads = 1;

  void validate() const;
};

struct SkipGramConfig {
  int dim = 60;
  int window = 10;
  int epochs = 5;
  double initial_learning_rate = 0.025;
  double min_learning_rate = 1e-4;
  std::uint64_t seed = 1;

  void validate() const;
};

// Logistic kernel of the standardized distance: 1 / (1 + exp(5 (d - mean) / stddev)).
double geo_kernel(double distance, const GeoStats& stats);

// Walk graph over POIs: training transition counts plus the coordinates the
// geographic kernel needs. `geo` is absent when the geographic term is unused.
struct TransitionGraph {
  TransitionCounts counts;
  std::vector<Poi> pois;
  DistanceMode mode = DistanceMode::kHaversine;
  std::optional<GeoStats> geo;

  std::size_t size() const { return pois.size(); }
};

TransitionGraph make_transition_graph(const Dataset& data, const Split& split, DistanceMode mode,
                                      bool with_geo, std::size_t geo_pair_cap = 0,
                                      std::uint64_t seed = 0);

// Next-step distribution of the walk from one POI. An empty `probs` marks a
// dead end: no transitions recorded and no geographic mass to fall back on.
struct StepDistribution {
  std::vector<double> probs;

  bool terminal() const { return probs.empty(); }
};

StepDistribution walk_transition_distribution(int from, const TransitionGraph& graph, double rho);

using Walk = std::vector<int>;

// walks_per_node walks from every POI, ordered round-major (round 0 for all
// POIs, then round 1, ...). Each walk draws from its own stream seeded by
// (seed, start POI, round), so the output does not depend on `threads`.
std::vector<Walk> generate_walks(const TransitionGraph& graph, const WalkConfig& cfg);

struct SkipGramResult {
  EmbeddingTable embeddings;
  std::vector<double> epoch_loss;  // mean negative log path probability per context pair
};

// SkipGram with hierarchical softmax over a Huffman tree of walk frequencies.
SkipGramResult train_skipgram(const std::vector<Walk>& walks, std::size_t vocab_size,
                              const SkipGramConfig& cfg);

// u_u = (1 / |L_u|) sum_j f_j q_j over the user's training check-ins.
EmbeddingTable init_user_embeddings(const Dataset& data, const Split& split,
                                    const EmbeddingTable& poi_embeddings);

}  // namespace nextpoi
