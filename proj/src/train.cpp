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

#include "nextpoi/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace nextpoi {
namespace {

// Intermediate values of the forward pass that back-propagation needs.
struct Forward {
  Vector x_prev;       // input of the previous POI
  double a0 = 0.0;     // W(t) = a0 W0 + a1 Wpi
  double a1 = 0.0;
  Matrix transition;   // W(t) or W1
  int slot = -1;
  Vector z_q;
  Vector h_q;
  Vector x_user;
  Vector z_u;
  Vector h_u;
  Matrix meta_rows;    // m_q for every POI (meta-data on)
  Matrix x_cand;
  Matrix z_cand;
  Matrix c;
  Vector s;            // h_u + h_q
  Vector y;
};

Forward forward(const TrainInstance& inst, const Model& model) {
  const auto& hp = model.hp;
  const auto& p = model.params;
  const bool meta = hp.flags.use_meta;
  if (inst.target < 0 || inst.target >= model.poi_count()) {
    throw DataError("training target outside the POI vocabulary");
  }
  Forward f;

  f.x_cand = p.pois.values;
  if (meta) {
    f.meta_rows.resize(f.x_cand.rows(), f.x_cand.cols());
    for (Index q = 0; q < f.x_cand.rows(); ++q) {
      f.meta_rows.row(q) = meta_embed(model.meta.poi_items.at(q), p.poi_meta).transpose();
    }
    f.x_cand = hp.alpha * f.x_cand + (1.0 - hp.alpha) * f.meta_rows;
  }
  f.z_cand = f.x_cand * p.w3.transpose();
  f.z_cand.rowwise() += p.b3.transpose();
  f.c = f.z_cand.cwiseMax(0.0);

  f.x_prev = poi_input(inst.prev_poi, model);
  if (hp.flags.use_interval) {
    const double t = interval_hours(inst.prev_time, inst.time);
    std::tie(f.a0, f.a1) = interval_weights(t, hp.interval_hours);
    f.transition = interval_matrix(t, p.w0, p.w_pi, hp.interval_hours);
  } else {
    f.transition = p.w1;
  }
  f.z_q = f.transition * f.x_prev;
  if (hp.flags.use_timeslot) {
    f.slot = time_slot(inst.time, hp.tz_offset_seconds);
    f.z_q += p.slot_bias.row(f.slot).transpose();
  } else {
    f.z_q += p.b1;
  }
  f.h_q = relu(f.z_q);

  if (inst.user < 0 || inst.user >= model.user_count()) {
    throw DataError("training instance references unknown user");
  }
  f.x_user = p.users.row(inst.user).transpose();
  if (meta) f.x_user = hp.beta * f.x_user + (1.0 - hp.beta) * meta_embed_user(inst.user, model);
  f.z_u = p.w2 * f.x_user + p.b2;
  f.h_u = relu(f.z_u);

  f.s = f.h_u + f.h_q;
  f.y = f.c * f.s;
  return f;
}

double log_sum_exp(const Vector& y) {
  const double top = y.maxCoeff();
  return top + std::log((y.array() - top).exp().sum());
}

Vector relu_mask(const Vector& z) { return (z.array() > 0.0).cast<double>().matrix(); }

// Every ReLU input of the forward pass, flattened.
std::vector<double> preactivations(const Forward& f) {
  std::vector<double> out(f.z_q.data(), f.z_q.data() + f.z_q.size());
  out.insert(out.end(), f.z_u.data(), f.z_u.data() + f.z_u.size());
  out.insert(out.end(), f.z_cand.data(), f.z_cand.data() + f.z_cand.size());
  return out;
}

}  // namespace

std::vector<TrainInstance> training_instances(const Dataset& data, const Split& split) {
  std::vector<TrainInstance> out;
  for (std::size_t u = 0; u < data.sequences.size(); ++u) {
    const auto train = segment_view(data, split, static_cast<int>(u), Segment::kTrain);
    for (std::size_t i = 1; i < train.size(); ++i) {
      out.push_back({static_cast<int>(u), train[i - 1].poi, train[i - 1].timestamp,
                     train[i].timestamp, train[i].poi});
    }
  }
  return out;
}

std::vector<TrainInstance> segment_instances(const Dataset& data, const Split& split,
                                             Segment segment) {
  std::vector<TrainInstance> out;
  for (std::size_t u = 0; u < data.sequences.size(); ++u) {
    const auto& seq = data.sequences[u];
    const auto [first, last] = split.range(static_cast<int>(u), segment);
    for (std::size_t i = std::max<std::size_t>(first, 1); i < last; ++i) {
      out.push_back({static_cast<int>(u), seq[i - 1].poi, seq[i - 1].timestamp, seq[i].timestamp,
                     seq[i].poi});
    }
  }
  return out;
}

double instance_loss(const TrainInstance& inst, const Model& model) {
  const Vector y = scores(inst.context(), model);
  if (inst.target < 0 || inst.target >= y.size()) {
    throw DataError("training target outside the POI vocabulary");
  }
  return log_sum_exp(y) - y[inst.target];
}

double squared_norm(const Parameters& p) {
  return p.users.values.squaredNorm() + p.pois.values.squaredNorm() +
         p.user_meta.values.squaredNorm() + p.poi_meta.values.squaredNorm() +
         p.w0.squaredNorm() + p.w_pi.squaredNorm() + p.w1.squaredNorm() + p.w2.squaredNorm() +
         p.w3.squaredNorm() + p.b1.squaredNorm() + p.b2.squaredNorm() + p.b3.squaredNorm() +
         p.slot_bias.squaredNorm();
}

GradientSet instance_gradients(const TrainInstance& inst, const Model& model, double* loss) {
  const auto& hp = model.hp;
  const auto& p = model.params;
  const bool meta = hp.flags.use_meta;
  const Forward f = forward(inst, model);
  const Index n = model.poi_count();
  const Index d = hp.dim;

  // d loss / d y = softmax(y) - onehot(target)
  const double lse = log_sum_exp(f.y);
  Vector g_y = (f.y.array() - lse).exp().matrix();
  if (loss != nullptr) *loss = lse - f.y[inst.target];
  g_y[inst.target] -= 1.0;

  GradientSet g;
  g.flags = hp.flags;
  const Vector g_s = f.c.transpose() * g_y;

  // Candidate side: c_k = relu(W3 x_k + b3) for every POI k.
  Matrix g_z = g_y * f.s.transpose();
  g_z.array() *= (f.z_cand.array() > 0.0).cast<double>();
  g.w3 = g_z.transpose() * f.x_cand;
  g.b3 = g_z.colwise().sum().transpose();
  const Matrix g_x = g_z * p.w3;
  g.pois = meta ? Matrix(hp.alpha * g_x) : g_x;
  if (meta) {
    g.poi_meta = Matrix::Zero(p.poi_meta.size(), d);
    for (Index q = 0; q < n; ++q) {
      const auto& items = model.meta.poi_items.at(q);
      if (items.empty()) continue;
      const double share = (1.0 - hp.alpha) / static_cast<double>(items.size());
      for (int w : items) g.poi_meta.row(w) += share * g_x.row(q);
    }
  }

  // User side: hu = relu(W2 x_u + b2).
  const Vector g_zu = g_s.cwiseProduct(relu_mask(f.z_u));
  g.w2 = g_zu * f.x_user.transpose();
  g.b2 = g_zu;
  const Vector g_xu = p.w2.transpose() * g_zu;
  g.user = inst.user;
  g.user_row = meta ? Vector(hp.beta * g_xu) : g_xu;
  if (meta) {
    const auto& items = model.meta.user_items.at(inst.user);
    for (int m : items) {
      g.user_meta_rows.emplace_back(m, (1.0 - hp.beta) / static_cast<double>(items.size()) * g_xu);
    }
  }

  // Previous-POI side: hq = relu(W(t) x_prev + bias).
  const Vector g_zq = g_s.cwiseProduct(relu_mask(f.z_q));
  const Matrix g_t = g_zq * f.x_prev.transpose();
  if (hp.flags.use_interval) {
    g.w0 = f.a0 * g_t;
    g.w_pi = f.a1 * g_t;
  } else {
    g.w1 = g_t;
  }
  if (hp.flags.use_timeslot) {
    g.slot = f.slot;
    g.slot_bias = g_zq;
  } else {
    g.b1 = g_zq;
  }
  const Vector g_xp = f.transition.transpose() * g_zq;
  g.pois.row(inst.prev_poi) += (meta ? hp.alpha : 1.0) * g_xp.transpose();
  if (meta) {
    const auto& items = model.meta.poi_items.at(inst.prev_poi);
    for (int w : items) {
      g.poi_meta.row(w) += (1.0 - hp.alpha) / static_cast<double>(items.size()) * g_xp.transpose();
    }
  }
  return g;
}

void sgd_step(Parameters& params, const GradientSet& g, double lr, double lambda) {
  const double decay = 2.0 * lambda;
  auto step = [&](auto& theta, const auto& grad) { theta -= lr * (grad + decay * theta); };

  step(params.pois.values, g.pois);
  if (g.flags.use_meta && g.poi_meta.size() > 0) step(params.poi_meta.values, g.poi_meta);
  step(params.w3, g.w3);
  step(params.b3, g.b3);
  step(params.w2, g.w2);
  step(params.b2, g.b2);
  if (g.flags.use_interval) {
    step(params.w0, g.w0);
    step(params.w_pi, g.w_pi);
  } else {
    step(params.w1, g.w1);
  }
  if (g.flags.use_timeslot) {
    auto row = params.slot_bias.row(g.slot);
    row -= lr * (g.slot_bias.transpose() + decay * row);
  } else {
    step(params.b1, g.b1);
  }
  if (g.user >= 0) {
    auto row = params.users.row(g.user);
    row -= lr * (g.user_row.transpose() + decay * row);
  }
  for (const auto& [m, grad] : g.user_meta_rows) {
    auto row = params.user_meta.row(m);
    row -= lr * (grad.transpose() + decay * row);
  }
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

TrainResult train(Model model, const std::vector<TrainInstance>& instances,
                  const Validator& validate, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  model.hp.validate();
  cfg.validate();
  if (instances.empty()) throw DataError("no training instances");

  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(derive_seed(cfg.shuffle_seed, 0x7a1));

  TrainResult result;
  result.best = model.params;
  result.best_valid_map = -std::numeric_limits<double>::infinity();
  // One regularizer for the whole sum over instances, spread across the steps.
  const double step_lambda = model.hp.lambda / static_cast<double>(instances.size());
  int stale = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    shuffle(order, rng);
    double loss_sum = 0.0;
    for (std::size_t i : order) {
      double loss = 0.0;
      const auto grads = instance_gradients(instances[i], model, &loss);
      if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) +
                              "; lower the learning rate");
      }
      loss_sum += loss;
      sgd_step(model.params, grads, model.hp.learning_rate, step_lambda);
    }
    if (!model.params.all_finite()) {
      throw DivergenceError("non-finite parameters after epoch " + std::to_string(epoch));
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(instances.size());
    rec.valid_map = validate(model);
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec, model);

    if (rec.valid_map > result.best_valid_map) {
      result.best = model.params;
      result.best_valid_map = rec.valid_map;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  return result;
}

GradientCheckResult gradient_check(const Model& model, const TrainInstance& inst, double eps,
                                   std::size_t samples_per_tensor, std::uint64_t seed) {
  const auto& hp = model.hp;
  const auto g = instance_gradients(inst, model);
  const auto base_pre = preactivations(forward(inst, model));
  Model probe = model;
  auto& p = probe.params;

  struct Target {
    std::string name;
    double* values;
    const double* grad;  // analytic gradient at the same flat offsets
    std::vector<Index> coords;
    bool all;  // check every listed coordinate instead of sampling
  };
  std::vector<Target> targets;
  auto dense = [](Index rows, Index cols) { return Matrix(Matrix::Zero(rows, cols)); };

  // Analytic gradients laid out like the parameter tensors.
  Matrix g_users = dense(p.users.size(), hp.dim);
  g_users.row(g.user) = g.user_row.transpose();
  Matrix g_user_meta = dense(p.user_meta.size(), hp.dim);
  for (const auto& [m, v] : g.user_meta_rows) g_user_meta.row(m) += v.transpose();
  Matrix g_slot = dense(kTimeSlots, hp.dim);
  if (g.slot >= 0) g_slot.row(g.slot) = g.slot_bias.transpose();

  auto rows_of = [&](Index first_row, Index count) {
    std::vector<Index> coords;
    for (Index r = first_row; r < first_row + count; ++r) {
      for (Index j = 0; j < hp.dim; ++j) coords.push_back(r * hp.dim + j);
    }
    return coords;
  };
  auto whole = [](Index size) {
    std::vector<Index> coords(static_cast<std::size_t>(size));
    for (Index i = 0; i < size; ++i) coords[static_cast<std::size_t>(i)] = i;
    return coords;
  };

  targets.push_back({"Q", p.pois.values.data(), g.pois.data(), whole(p.pois.values.size()), false});
  targets.push_back({"U", p.users.values.data(), g_users.data(), rows_of(inst.user, 1), false});
  targets.push_back({"W2", p.w2.data(), g.w2.data(), whole(p.w2.size()), false});
  targets.push_back({"W3", p.w3.data(), g.w3.data(), whole(p.w3.size()), false});
  targets.push_back({"b2", p.b2.data(), g.b2.data(), whole(p.b2.size()), true});
  targets.push_back({"b3", p.b3.data(), g.b3.data(), whole(p.b3.size()), true});
  if (hp.flags.use_meta) {
    targets.push_back({"M_poi", p.poi_meta.values.data(), g.poi_meta.data(),
                       whole(p.poi_meta.values.size()), false});
    std::vector<Index> coords;
    for (int m : model.meta.user_items.at(inst.user)) {
      const auto rows = rows_of(m, 1);
      coords.insert(coords.end(), rows.begin(), rows.end());
    }
    targets.push_back({"M_user", p.user_meta.values.data(), g_user_meta.data(), coords, false});
  }
  if (hp.flags.use_interval) {
    targets.push_back({"W0", p.w0.data(), g.w0.data(), whole(p.w0.size()), false});
    targets.push_back({"W_pi", p.w_pi.data(), g.w_pi.data(), whole(p.w_pi.size()), false});
  } else {
    targets.push_back({"W1", p.w1.data(), g.w1.data(), whole(p.w1.size()), false});
  }
  if (hp.flags.use_timeslot) {
    targets.push_back({"B", p.slot_bias.data(), g_slot.data(), rows_of(g.slot, 1), true});
  } else {
    targets.push_back({"b1", p.b1.data(), g.b1.data(), whole(p.b1.size()), true});
  }

  auto crosses_kink = [&](const std::vector<double>& lo, const std::vector<double>& hi) {
    for (std::size_t k = 0; k < base_pre.size(); ++k) {
      const bool a = lo[k] > 0.0;
      const bool b = hi[k] > 0.0;
      const bool c = base_pre[k] > 0.0;
      if (a != b || a != c) return true;
    }
    return false;
  };

  GradientCheckResult result;
  std::mt19937_64 rng(derive_seed(seed, 0x9c4));
  for (auto& t : targets) {
    auto coords = t.coords;
    if (!t.all && coords.size() > samples_per_tensor) {
      shuffle(coords, rng);
      coords.resize(samples_per_tensor);
    }
    for (Index idx : coords) {
      double& theta = t.values[idx];
      const double saved = theta;
      theta = saved + eps;
      const double j_plus = instance_loss(inst, probe);
      const auto pre_plus = preactivations(forward(inst, probe));
      theta = saved - eps;
      const double j_minus = instance_loss(inst, probe);
      const auto pre_minus = preactivations(forward(inst, probe));
      theta = saved;
      if (crosses_kink(pre_minus, pre_plus)) {
        ++result.skipped_kinks;
        continue;
      }
      const double numeric = (j_plus - j_minus) / (2.0 * eps);
      const double analytic = t.grad[idx];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
      const double err = std::abs(analytic - numeric) / denom;
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_tensor = t.name;
      }
    }
  }
  return result;
}

}  // namespace nextpoi
