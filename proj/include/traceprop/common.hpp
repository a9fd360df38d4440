// Copyright 2026 The Traceprop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRACEPROP_COMMON_HPP_
#define TRACEPROP_COMMON_HPP_

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace traceprop {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Arr = Eigen::ArrayXd;

// Invalid dimensions, bad parameter values, malformed run configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values encountered during simulation or training.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, long step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

inline void check_finite(const Eigen::Ref<const Mat>& m, const char* name,
                         long step) {
  if (!m.allFinite())
    throw NumericError(std::string("non-finite values in ") + name, step);
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Arr logistic(const Arr& x) { return 1.0 / (1.0 + (-x).exp()); }

inline double decay_from_tau(double tau_ms, double dt_ms) {
  require(tau_ms > 0.0 && dt_ms > 0.0, "time constants must be positive");
  return std::exp(-dt_ms / tau_ms);
}

// SplitMix64 step; used to derive independent streams from one run seed so
// batch elements stay reproducible under any parallel schedule.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return std::mt19937_64(split_seed(seed, stream));
}

// Runs fn(i) for i in [0, n). Results must be written to per-index slots;
// callers reduce in index order afterwards so the outcome does not depend on
// the number of workers.
inline void parallel_for(int n, int n_threads,
                         const std::function<void(int)>& fn) {
  if (n_threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next(0);
  auto worker = [&]() {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::thread> pool;
  const int k = std::min(n_threads, n);
  pool.reserve(k);
  for (int t = 0; t < k; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

inline int env_thread_count() {
  if (const char* s = std::getenv("TRACEPROP_THREADS")) {
    const int v = std::atoi(s);
    if (v > 0) return v;
  }
  return 1;
}

inline Mat gaussian_matrix(std::mt19937_64& rng, int rows, int cols,
                           double scale) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * dist(rng);
  return m;
}

inline Mat bernoulli_matrix(std::mt19937_64& rng, int rows, int cols,
                            double p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng) < p ? 1.0 : 0.0;
  return m;
}

}  // namespace traceprop

#endif  // TRACEPROP_COMMON_HPP_
