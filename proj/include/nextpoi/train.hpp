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
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "nextpoi/common.hpp"
#include "nextpoi/data.hpp"
#include "nextpoi/model.hpp"

namespace nextpoi {

// One prediction target: `target` visited at `time` right after `prev_poi`.
struct TrainInstance {
  int user = 0;
  int prev_poi = 0;
  std::int64_t prev_time = 0;
  std::int64_t time = 0;
  int target = 0;

  QueryContext context() const { return {UserQuery::trained(user), prev_poi, prev_time, time}; }
};

// Consecutive pairs inside each user's training segment.
std::vector<TrainInstance> training_instances(const Dataset& data, const Split& split);

// One instance per check-in of the validation or test segment. The first one
// takes its previous POI from the tail of the preceding segment.
std::vector<TrainInstance> segment_instances(const Dataset& data, const Split& split,
                                             Segment segment);

// Gradient of the data term for one instance. Dense tensors cover everything a
// full-vocabulary softmax reaches; user-side rows are sparse.
struct GradientSet {
  Matrix pois;      // every row: previous POI plus all candidates
  Matrix poi_meta;  // zero-sized when meta-data is off
  Matrix w0;
  Matrix w_pi;
  Matrix w1;
  Matrix w2;
  Matrix w3;
  Vector b1;
  Vector b2;
  Vector b3;
  int slot = -1;  // slot_bias row reached, or -1 when the slot path is off
  Vector slot_bias;
  int user = -1;
  Vector user_row;
  std::vector<std::pair<int, Vector>> user_meta_rows;
  FeatureFlags flags;
};

// Data term only: -log p(target).
double instance_loss(const TrainInstance& inst, const Model& model);

// Sum of squared entries over every parameter tensor.
double squared_norm(const Parameters& params);

GradientSet instance_gradients(const TrainInstance& inst, const Model& model,
                               double* loss = nullptr);

// theta <- theta - lr (g + 2 lambda theta) on the tensors and rows the
// instance reached.
void sgd_step(Parameters& params, const GradientSet& grads, double learning_rate, double lambda);

struct TrainConfig {
  int max_epochs = 50;
  int patience = 5;
  std::uint64_t shuffle_seed = 1;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double valid_map = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  Parameters best;
  int best_epoch = 0;
  double best_valid_map = 0.0;
  std::vector<EpochRecord> history;
};

// Returns the validation MAP of the current parameters.
using Validator = std::function<double(const Model&)>;
using EpochCallback = std::function<void(const EpochRecord&, const Model&)>;

// Per-instance SGD with seeded shuffling, validation after each epoch and
// early stopping once `patience` epochs pass without a strictly better MAP.
// Each step applies lambda / instances.size() as its share of the decay.
// Returns the best snapshot. Throws DivergenceError on a non-finite loss.
TrainResult train(Model model, const std::vector<TrainInstance>& instances,
                  const Validator& validate, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

// Central differences (J(theta + eps) - J(theta - eps)) / (2 eps) of the data
// term against instance_gradients. Checks every bias coordinate plus up to
// `samples_per_tensor` seeded coordinates of each other active tensor.
// Coordinates whose perturbation moves any ReLU input across zero are skipped.
// Relative error is |a - n| / max(|a|, |n|, 1e-3).
GradientCheckResult gradient_check(const Model& model, const TrainInstance& inst, double eps,
                                   std::size_t samples_per_tensor, std::uint64_t seed = 1);

}  // namespace nextpoi
