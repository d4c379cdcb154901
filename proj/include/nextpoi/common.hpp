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
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nextpoi {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Error categories map one-to-one onto the CLI exit codes (1, 2, 3).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One row of `dim` reals per vocabulary item; row index is the dense id.
struct EmbeddingTable {
  Matrix values;

  EmbeddingTable() = default;
  EmbeddingTable(Index count, Index dim) : values(Matrix::Zero(count, dim)) {}
  explicit EmbeddingTable(Matrix m) : values(std::move(m)) {}

  Index size() const { return values.rows(); }
  Index dim() const { return values.cols(); }
  auto row(Index i) { return values.row(i); }
  auto row(Index i) const { return values.row(i); }
  bool all_finite() const { return values.allFinite(); }
};

// SplitMix64 finalizer. Used to derive independent stream seeds from
// (seed, a, b) tuples so that results never depend on iteration order.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return mix_seed(mix_seed(mix_seed(seed) ^ a) ^ b);
}

// Uniform double in [0, 1) from the top 53 bits of a 64-bit engine draw.
// Avoids std::uniform_real_distribution, whose output is implementation-defined.
template <class Engine>
double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
template <class Engine>
double uniform(Engine& engine, double lo, double hi) {
  return lo + (hi - lo) * uniform01(engine);
}

// Uniform integer in [0, n). Multiply-shift keeps it portable across stdlibs.
template <class Engine>
std::uint64_t uniform_index(Engine& engine, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine()) * n) >> 64);
}

// Portable Fisher-Yates; std::shuffle's sequence is implementation-defined.
template <class Engine, class Range>
void shuffle(Range& range, Engine& engine) {
  const auto n = static_cast<std::uint64_t>(std::size(range));
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(engine, i);
    using std::swap;
    swap(range[i - 1], range[j]);
  }
}

}  // namespace nextpoi
