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

#ifndef TRACEPROP_OPTIMIZER_HPP_
#define TRACEPROP_OPTIMIZER_HPP_

#include <vector>

#include "traceprop/cells.hpp"
#include "traceprop/common.hpp"
#include "traceprop/gradients.hpp"

namespace traceprop {

// Zero-mean Gaussian weights scaled by 1/sqrt(fan-in); the recurrent
// diagonal is zeroed. `scale` multiplies the default standard deviation.
inline NetworkWeights init_weights(int n_in, int n_rec, int n_out,
                                   std::mt19937_64& rng, double scale = 1.0) {
  NetworkWeights w;
  w.theta_in = gaussian_matrix(rng, n_rec, n_in, scale / std::sqrt(n_in));
  w.theta_rec = gaussian_matrix(rng, n_rec, n_rec, scale / std::sqrt(n_rec));
  w.theta_rec.diagonal().setZero();
  w.theta_out = gaussian_matrix(rng, n_out, n_rec, scale / std::sqrt(n_rec));
  w.b_out = Vec::Zero(n_out);
  return w;
}

inline LstmWeights init_lstm_weights(int n_in, int n_units, int n_out,
                                     std::mt19937_64& rng, double scale = 1.0) {
  LstmWeights w;
  for (int b = 0; b < 4; ++b) {
    w.w_in[b] = gaussian_matrix(rng, n_units, n_in, scale / std::sqrt(n_in));
    w.w_rec[b] =
        gaussian_matrix(rng, n_units, n_units, scale / std::sqrt(n_units));
  }
  w.theta_out = gaussian_matrix(rng, n_out, n_units, scale / std::sqrt(n_units));
  w.b_out = Vec::Zero(n_out);
  return w;
}

// Batch gradients are cumulated additively; learning rates in the run
// configurations assume this sum convention.
template <typename G>
inline G accumulate(const std::vector<G>& batch, const G& zero) {
  G total = zero;
  for (const G& g : batch) total += g;
  return total;
}

// Adam with one moment pair per weight block. Operates on flat views of the
// Eigen storage so the same state type serves both weight families.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<Vec> m, v;

  static AdamState init(const std::vector<long>& block_sizes,
                        double beta1 = 0.9, double beta2 = 0.999,
                        double epsilon = 1e-8) {
    AdamState s;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    for (long n : block_sizes) {
      s.m.push_back(Vec::Zero(n));
      s.v.push_back(Vec::Zero(n));
    }
    return s;
  }
};

namespace detail {

inline void adam_block(Eigen::Map<Arr> w, Eigen::Map<const Arr> g,
                       AdamState& st, int block, double rate) {
  Vec& m = st.m[block];
  Vec& v = st.v[block];
  m.array() = st.beta1 * m.array() + (1.0 - st.beta1) * g;
  v.array() = st.beta2 * v.array() + (1.0 - st.beta2) * g.square();
  const double bc1 = 1.0 - std::pow(st.beta1, double(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, double(st.step));
  w -= rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + st.epsilon);
}

inline Eigen::Map<Arr> flat(Mat& m) { return {m.data(), m.size()}; }
inline Eigen::Map<Arr> flat(Vec& m) { return {m.data(), m.size()}; }
inline Eigen::Map<const Arr> cflat(const Mat& m) { return {m.data(), m.size()}; }
inline Eigen::Map<const Arr> cflat(const Vec& m) { return {m.data(), m.size()}; }

}  // namespace detail

inline std::vector<long> adam_block_sizes(const NetworkWeights& w) {
  return {w.theta_in.size(), w.theta_rec.size(), w.theta_out.size(),
          w.b_out.size()};
}

inline std::vector<long> adam_block_sizes(const LstmWeights& w) {
  std::vector<long> s;
  for (int b = 0; b < 4; ++b) {
    s.push_back(w.w_in[b].size());
    s.push_back(w.w_rec[b].size());
  }
  s.push_back(w.theta_out.size());
  s.push_back(w.b_out.size());
  return s;
}

// One Adam update from accumulated gradients. The recurrent diagonal is
// masked so it stays exactly zero no matter what the gradients contain.
inline void adam_update(NetworkWeights& w, const RnnGradients& g,
                        AdamState& st, double rate) {
  require(st.m.size() == 4, "adam_update: state not initialized for RNN");
  ++st.step;
  detail::adam_block(detail::flat(w.theta_in), detail::cflat(g.d_in), st, 0,
                     rate);
  RnnGradients masked_ref = g;  // diagonal never receives updates
  masked_ref.d_rec.diagonal().setZero();
  detail::adam_block(detail::flat(w.theta_rec), detail::cflat(masked_ref.d_rec),
                     st, 1, rate);
  w.zero_diagonal();
  detail::adam_block(detail::flat(w.theta_out), detail::cflat(g.d_out), st, 2,
                     rate);
  detail::adam_block(detail::flat(w.b_out), detail::cflat(g.d_b), st, 3, rate);
}

inline void adam_update(LstmWeights& w, const LstmGradients& g, AdamState& st,
                        double rate) {
  require(st.m.size() == 10, "adam_update: state not initialized for LSTM");
  ++st.step;
  int blk = 0;
  for (int b = 0; b < 4; ++b) {
    detail::adam_block(detail::flat(w.w_in[b]), detail::cflat(g.d_in[b]), st,
                       blk++, rate);
    detail::adam_block(detail::flat(w.w_rec[b]), detail::cflat(g.d_rec[b]), st,
                       blk++, rate);
  }
  detail::adam_block(detail::flat(w.theta_out), detail::cflat(g.d_out), st,
                     blk++, rate);
  detail::adam_block(detail::flat(w.b_out), detail::cflat(g.d_b), st, blk++,
                     rate);
}

// Step-decay learning-rate schedule: rate(i) = initial * factor^(i / period).
struct Schedule {
  double initial = 1e-3;
  double factor = 1.0;
  int period = 0;  // iterations between decays; 0 disables decay

  double rate_at(int iteration) const {
    require(factor > 0.0 && factor <= 1.0, "Schedule: factor must be in (0,1]");
    if (period <= 0 || factor == 1.0) return initial;
    return initial * std::pow(factor, double(iteration / period));
  }
};

}  // namespace traceprop

#endif  // TRACEPROP_OPTIMIZER_HPP_
