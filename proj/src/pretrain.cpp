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

#include "nextpoi/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "nextpoi/parallel.hpp"

namespace nextpoi {
namespace {

// Cumulative (unnormalized) masses; sampling inverts the CDF.
struct Cdf {
  std::vector<int> targets;
  std::vector<double> cumulative;

  bool empty() const { return cumulative.empty() || !(cumulative.back() > 0.0); }

  int sample(double u) const {
    const double x = u * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), x);
    auto i = static_cast<std::size_t>(it - cumulative.begin());
    if (i >= cumulative.size()) i = cumulative.size() - 1;
    return targets[i];
  }
};

std::vector<double> kernel_row(int from, const TransitionGraph& graph) {
  const auto n = graph.size();
  std::vector<double> row(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (static_cast<int>(k) == from) continue;
    row[k] = geo_kernel(poi_distance(graph.pois[from], graph.pois[k], graph.mode), *graph.geo);
  }
  return row;
}

Cdf frequency_cdf(int from, const TransitionGraph& graph) {
  Cdf cdf;
  double acc = 0.0;
  for (const auto& [to, c] : graph.counts.row(from)) {
    if (c <= 0) continue;
    acc += static_cast<double>(c);
    cdf.targets.push_back(to);
    cdf.cumulative.push_back(acc);
  }
  return cdf;
}

Cdf geo_cdf(int from, const TransitionGraph& graph) {
  Cdf cdf;
  const auto row = kernel_row(from, graph);
  double acc = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (static_cast<int>(k) == from) continue;
    acc += row[k];
    cdf.targets.push_back(static_cast<int>(k));
    cdf.cumulative.push_back(acc);
  }
  return cdf;
}


double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct HuffmanCodes {
  std::vector<std::vector<std::uint8_t>> code;  // per vocab id, root to leaf
  std::vector<std::vector<int>> point;          // inner-node ids along the path
};

// Same construction as the reference word2vec tool: two-pointer merge over
// counts sorted descending, ties by ascending id.
HuffmanCodes build_huffman(const std::vector<std::int64_t>& counts) {
  const std::size_t vocab = counts.size();
  HuffmanCodes out;
  out.code.resize(vocab);
  out.point.resize(vocab);
  if (vocab < 2) return out;

  std::vector<int> order(vocab);
  for (std::size_t i = 0; i < vocab; ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return counts[a] > counts[b]; });

  std::vector<std::int64_t> count(2 * vocab, 0);
  std::vector<std::uint8_t> binary(2 * vocab, 0);
  std::vector<std::size_t> parent(2 * vocab, 0);
  for (std::size_t a = 0; a < vocab; ++a) count[a] = counts[order[a]];
  for (std::size_t a = vocab; a < 2 * vocab; ++a) count[a] = INT64_MAX / 4;

  std::ptrdiff_t pos1 = static_cast<std::ptrdiff_t>(vocab) - 1;
  std::size_t pos2 = vocab;
  auto take_min = [&]() {
    if (pos1 >= 0 && count[pos1] < count[pos2]) return static_cast<std::size_t>(pos1--);
    return pos2++;
  };
  for (std::size_t a = 0; a + 1 < vocab; ++a) {
    const auto min1 = take_min();
    const auto min2 = take_min();
    count[vocab + a] = count[min1] + count[min2];
    parent[min1] = vocab + a;
    parent[min2] = vocab + a;
    binary[min2] = 1;
  }

  const std::size_t root = 2 * vocab - 2;
  for (std::size_t a = 0; a < vocab; ++a) {
    std::vector<std::uint8_t> code;
    std::vector<int> point;
    std::size_t b = a;
    while (b != root) {
      code.push_back(binary[b]);
      b = parent[b];
      point.push_back(static_cast<int>(b - vocab));
    }
    std::reverse(code.begin(), code.end());
    std::reverse(point.begin(), point.end());
    out.code[order[a]] = std::move(code);
    out.point[order[a]] = std::move(point);
  }
  return out;
}

}  // namespace

void WalkConfig::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
  if (walks_per_node < 1) throw ConfigError("walks_per_node must be >= 1");
  if (walk_length < 2) throw ConfigError("walk_length must be >= 2");
}

void SkipGramConfig::validate() const {
  if (dim < 1) throw ConfigError("skipgram dim must be >= 1");
  if (window < 1) throw ConfigError("skipgram window must be >= 1");
  if (epochs < 1) throw ConfigError("skipgram epochs must be >= 1");
  if (!(initial_learning_rate > 0.0)) throw ConfigError("skipgram learning rate must be > 0");
}

double geo_kernel(double distance, const GeoStats& stats) {
  if (!std::isfinite(distance)) throw DataError("geo_kernel: non-finite distance");
  if (!(stats.stddev > 0.0)) throw DataError("geo_kernel: distance stddev must be positive");
  return 1.0 / (1.0 + std::exp(5.0 * (distance - stats.mean) / stats.stddev));
}

TransitionGraph make_transition_graph(const Dataset& data, const Split& split, DistanceMode mode,
                                      bool with_geo, std::size_t geo_pair_cap,
                                      std::uint64_t seed) {
  TransitionGraph graph;
  graph.counts = build_transition_counts(data, split);
  graph.pois = data.pois;
  graph.mode = mode;
  if (with_geo) graph.geo = compute_geo_stats(data.pois, mode, geo_pair_cap, seed);
  return graph;
}

StepDistribution walk_transition_distribution(int from, const TransitionGraph& graph, double rho) {
  const auto n = graph.size();
  const std::int64_t freq_total = graph.counts.row_total(from);
  const bool has_freq = freq_total > 0 && rho < 1.0;
  const bool has_geo = rho > 0.0 && n > 1;
  if (!has_freq && !has_geo) return {};

  StepDistribution dist;
  dist.probs.assign(n, 0.0);
  if (has_geo) {
    if (!graph.geo) throw DataError("walk graph has no geographic statistics but rho > 0");
    const auto row = kernel_row(from, graph);
    double sum = 0.0;
    for (double k : row) sum += k;
    const double weight = has_freq ? rho : 1.0;
    for (std::size_t k = 0; k < n; ++k) dist.probs[k] += weight * row[k] / sum;
  }
  if (has_freq) {
    const double weight = has_geo ? 1.0 - rho : 1.0;
    for (const auto& [to, c] : graph.counts.row(from)) {
      dist.probs[to] += weight * static_cast<double>(c) / static_cast<double>(freq_total);
    }
  }
  return dist;
}

std::vector<Walk> generate_walks(const TransitionGraph& graph, const WalkConfig& cfg) {
  cfg.validate();
  const auto n = graph.size();
  if (n == 0) throw DataError("cannot generate walks over an empty graph");
  if (cfg.rho > 0.0 && n > 1 && !graph.geo) {
    throw DataError("walk graph has no geographic statistics but rho > 0");
  }

  std::vector<Cdf> freq(n);
  std::vector<Cdf> geo(cfg.rho > 0.0 && n > 1 ? n : 0);
  parallel_for(n, cfg.threads, [&](std::size_t q) {
    if (cfg.rho < 1.0) freq[q] = frequency_cdf(static_cast<int>(q), graph);
    if (!geo.empty()) geo[q] = geo_cdf(static_cast<int>(q), graph);
  });

  const auto rounds = static_cast<std::size_t>(cfg.walks_per_node);
  std::vector<Walk> walks(rounds * n);
  parallel_for(n, cfg.threads, [&](std::size_t start) {
    std::mt19937_64 rng(derive_seed(cfg.seed, start));
    for (std::size_t round = 0; round < rounds; ++round) {
      Walk walk{static_cast<int>(start)};
      walk.reserve(cfg.walk_length);
      while (walk.size() < static_cast<std::size_t>(cfg.walk_length)) {
        const int cur = walk.back();
        const bool has_freq = !freq[cur].empty();
        const bool has_geo = !geo.empty() && !geo[cur].empty();
        if (!has_freq && !has_geo) break;
        const double pick = uniform01(rng);
        const double u = uniform01(rng);
        const bool use_geo = has_geo && (!has_freq || pick < cfg.rho);
        walk.push_back(use_geo ? geo[cur].sample(u) : freq[cur].sample(u));
      }
      walks[round * n + start] = std::move(walk);
    }
  });
  return walks;
}

SkipGramResult train_skipgram(const std::vector<Walk>& walks, std::size_t vocab_size,
                              const SkipGramConfig& cfg) {
  cfg.validate();
  if (walks.empty()) throw DataError("train_skipgram: empty walk set");
  if (vocab_size == 0) throw DataError("train_skipgram: empty vocabulary");

  std::vector<std::int64_t> counts(vocab_size, 0);
  std::int64_t tokens = 0;
  for (const auto& walk : walks) {
    for (int q : walk) {
      if (q < 0 || static_cast<std::size_t>(q) >= vocab_size) {
        throw DataError("train_skipgram: walk id " + std::to_string(q) + " outside vocabulary");
      }
      ++counts[q];
      ++tokens;
    }
  }
  const auto tree = build_huffman(counts);

  const Index dim = cfg.dim;
  std::mt19937_64 rng(derive_seed(cfg.seed, 0x5e9));
  SkipGramResult result;
  result.embeddings = EmbeddingTable(static_cast<Index>(vocab_size), dim);
  auto& syn0 = result.embeddings.values;
  for (Index i = 0; i < syn0.rows(); ++i) {
    for (Index j = 0; j < dim; ++j) syn0(i, j) = uniform(rng, -0.5, 0.5) / static_cast<double>(dim);
  }
  Matrix syn1 = Matrix::Zero(static_cast<Index>(std::max<std::size_t>(vocab_size, 2) - 1), dim);

  const double total_steps = static_cast<double>(cfg.epochs) * static_cast<double>(tokens) + 1.0;
  double processed = 0.0;
  Vector grad_in(dim);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss = 0.0;
    std::int64_t pairs = 0;
    for (const auto& walk : walks) {
      const auto len = static_cast<std::ptrdiff_t>(walk.size());
      for (std::ptrdiff_t pos = 0; pos < len; ++pos, processed += 1.0) {
        const double lr = std::max(cfg.min_learning_rate,
                                   cfg.initial_learning_rate * (1.0 - processed / total_steps));
        // Effective window drawn uniformly from [1, window], as in word2vec.
        const auto reach =
            static_cast<std::ptrdiff_t>(cfg.window) -
            static_cast<std::ptrdiff_t>(uniform_index(rng, static_cast<std::uint64_t>(cfg.window)));
        const int center = walk[pos];
        const auto& code = tree.code[center];
        const auto& point = tree.point[center];
        for (auto c = std::max<std::ptrdiff_t>(0, pos - reach);
             c <= std::min(len - 1, pos + reach); ++c) {
          if (c == pos) continue;
          auto input = syn0.row(walk[c]);
          grad_in.setZero();
          for (std::size_t k = 0; k < code.size(); ++k) {
            auto inner = syn1.row(point[k]);
            const double x = input.dot(inner);
            loss += code[k] == 0 ? softplus(-x) : softplus(x);
            const double g = (1.0 - code[k] - sigmoid(x)) * lr;
            grad_in.noalias() += g * inner.transpose();
            inner.noalias() += g * input;
          }
          input.noalias() += grad_in.transpose();
          ++pairs;
        }
      }
    }
    result.epoch_loss.push_back(pairs > 0 ? loss / static_cast<double>(pairs) : 0.0);
  }
  return result;
}

EmbeddingTable init_user_embeddings(const Dataset& data, const Split& split,
                                    const EmbeddingTable& poi_embeddings) {
  EmbeddingTable users(static_cast<Index>(data.users.size()), poi_embeddings.dim());
  for (std::size_t u = 0; u < data.users.size(); ++u) {
    const auto train = segment_view(data, split, static_cast<int>(u), Segment::kTrain);
    if (train.empty()) {
      throw DataError("user " + data.users[u].id + " has no training check-ins");
    }
    std::map<int, std::int64_t> freq;
    for (const auto& c : train) ++freq[c.poi];
    auto row = users.row(static_cast<Index>(u));
    for (const auto& [q, f] : freq) row += static_cast<double>(f) * poi_embeddings.row(q);
    row /= static_cast<double>(train.size());
  }
  return users;
}

}  // namespace nextpoi
