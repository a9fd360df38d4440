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

#ifndef TRACEPROP_DYNAMICS_HPP_
#define TRACEPROP_DYNAMICS_HPP_

#include <utility>

#include "traceprop/cells.hpp"
#include "traceprop/common.hpp"

namespace traceprop {

// Surrogate for dz/dv: gamma * max(0, 1 - |(v - A)/v_th|). Refractory
// neurons have h = 0; callers pass a mask for that.
inline double pseudo_derivative(double v, double a_threshold,
                                const LifParams& p) {
  return p.gamma * std::max(0.0, 1.0 - std::abs((v - a_threshold) / p.v_th));
}

inline Vec pseudo_derivative(const Vec& v, const Vec& a_threshold,
                             const LifParams& p) {
  return (p.gamma *
          (1.0 - ((v - a_threshold).array() / p.v_th).abs()).max(0.0))
      .matrix();
}

namespace detail {

// Voltage update shared by LIF and ALIF so that ALIF with beta = 0 is
// bit-identical to LIF: v' = alpha*v + W_rec z + W_in x - z*v_th.
inline Vec membrane_update(const Vec& v, const Vec& z, const Vec& x_t,
                           const LifParams& p, const NetworkWeights& w) {
  Vec v_new = p.alpha * v - p.v_th * z;
  v_new.noalias() += w.theta_rec * z;
  v_new.noalias() += w.theta_in * x_t;
  return v_new;
}

inline void spike_and_refractory(const Vec& v_new, const Vec& a_threshold,
                                 const Eigen::VectorXi& refrac_old,
                                 const LifParams& p, Vec* z_new,
                                 Eigen::VectorXi* refrac_new, Vec* h_new) {
  const int n = static_cast<int>(v_new.size());
  z_new->resize(n);
  refrac_new->resize(n);
  h_new->resize(n);
  for (int j = 0; j < n; ++j) {
    const bool blocked = refrac_old[j] > 0;
    const bool spike = !blocked && v_new[j] >= a_threshold[j];
    (*z_new)[j] = spike ? 1.0 : 0.0;
    (*refrac_new)[j] =
        spike ? p.refractory_steps : std::max(refrac_old[j] - 1, 0);
    (*h_new)[j] = blocked ? 0.0 : pseudo_derivative(v_new[j], a_threshold[j], p);
  }
}

}  // namespace detail

// Advances a LIF network by one step. Returns the pseudo-derivatives of the
// new state through *h_new when non-null.
inline NetworkState lif_step(const NetworkState& state, const Vec& x_t,
                             const LifParams& p, const NetworkWeights& w,
                             Vec* h_new = nullptr) {
  require(x_t.size() == w.theta_in.cols() && state.v.size() == w.theta_rec.rows(),
          "lif_step: dimension mismatch");
  NetworkState next;
  next.v = detail::membrane_update(state.v, state.z, x_t, p, w);
  const Vec a_threshold = Vec::Constant(next.v.size(), p.v_th);
  Vec h;
  detail::spike_and_refractory(next.v, a_threshold, state.refrac, p, &next.z,
                               &next.refrac, &h);
  if (h_new) *h_new = h;
  next.y = state.y;
  return next;
}

// Advances an ALIF network by one step. The adaptation integrates the
// previous spike: a' = rho*a + z, and the effective threshold is
// A' = v_th + beta .* a'.
inline NetworkState alif_step(const NetworkState& state, const Vec& x_t,
                              const AlifParams& p, const NetworkWeights& w,
                              Vec* h_new = nullptr) {
  require(state.a.size() == state.v.size(), "alif_step: a-vector missing");
  require(x_t.size() == w.theta_in.cols() && state.v.size() == w.theta_rec.rows(),
          "alif_step: dimension mismatch");
  NetworkState next;
  next.v = detail::membrane_update(state.v, state.z, x_t, p.lif, w);
  next.a = p.rho * state.a + state.z;
  const Vec a_threshold =
      (p.lif.v_th + p.beta.array() * next.a.array()).matrix();
  Vec h;
  detail::spike_and_refractory(next.v, a_threshold, state.refrac, p.lif,
                               &next.z, &next.refrac, &h);
  if (h_new) *h_new = h;
  next.y = state.y;
  return next;
}

// Leaky readout: y_k = kappa*y_k + sum_j theta_out_kj z_j + b_k.
inline Vec readout_step(const Vec& y_prev, const Vec& z,
                        const NetworkWeights& w, double kappa) {
  require(kappa >= 0.0 && kappa < 1.0, "readout_step: kappa must be in [0,1)");
  require(z.size() == w.theta_out.cols() && y_prev.size() == w.theta_out.rows(),
          "readout_step: dimension mismatch");
  Vec y = kappa * y_prev + w.b_out;
  y.noalias() += w.theta_out * z;
  return y;
}

inline Vec readout_step(const Vec& y_prev, const Vec& z, const Mat& theta_out,
                        const Vec& b_out, double kappa) {
  Vec y = kappa * y_prev + b_out;
  y.noalias() += theta_out * z;
  return y;
}

// Sigmoidal RNN step: s' = alpha*s + W_rec z + W_in x, z' = logistic(s').
// The state reuses the v field for s.
inline NetworkState sigmoid_rnn_step(const NetworkState& state, const Vec& x_t,
                                     const SigmoidParams& p,
                                     const NetworkWeights& w,
                                     Vec* dz_ds = nullptr) {
  require(x_t.size() == w.theta_in.cols() && state.v.size() == w.theta_rec.rows(),
          "sigmoid_rnn_step: dimension mismatch");
  NetworkState next;
  next.v = p.alpha * state.v;
  next.v.noalias() += w.theta_rec * state.z;
  next.v.noalias() += w.theta_in * x_t;
  next.z = logistic(next.v.array()).matrix();
  if (dz_ds) *dz_ds = (next.z.array() * (1.0 - next.z.array())).matrix();
  next.refrac = state.refrac;
  next.y = state.y;
  return next;
}

// LSTM step. Gates read the previous observable state and the current input;
// the cell output applies the output gate to c directly (no tanh):
// c' = f.*c + i.*cbar, h' = o.*c'.
inline LstmState lstm_step(const LstmState& state, const Vec& x_t,
                           const LstmWeights& w) {
  require(x_t.size() == w.w_in[0].cols() && state.h.size() == w.w_rec[0].rows(),
          "lstm_step: dimension mismatch");
  LstmState next;
  for (int g = 0; g < 4; ++g) {
    Vec pre = w.w_rec[g] * state.h;
    pre.noalias() += w.w_in[g] * x_t;
    if (g == kGateCand) {
      next.gates[g] = pre.array().tanh().matrix();
    } else {
      next.gates[g] = logistic(pre.array()).matrix();
    }
  }
  next.c = (next.gates[kGateForget].array() * state.c.array() +
            next.gates[kGateIn].array() * next.gates[kGateCand].array())
               .matrix();
  next.h = (next.gates[kGateOut].array() * next.c.array()).matrix();
  next.y = state.y;
  return next;
}

// Full per-step record of one simulated trial for the LIF/ALIF/sigmoid
// family. Row t of each field holds the state at step t; row 0 is the
// initial state. h holds pseudo-derivatives (spiking) or dz/ds (sigmoid).
struct Trajectory {
  Mat inputs;  // [T x n_in]
  Mat v;       // [T+1 x n_rec]
  Mat a;       // [T+1 x n_rec] (zero-size for non-adaptive models)
  Mat z;       // [T+1 x n_rec]
  Mat h;       // [T+1 x n_rec]
  Mat y;       // [T+1 x n_out]

  int steps() const { return static_cast<int>(inputs.rows()); }
};

struct LstmTrajectory {
  Mat inputs;                 // [T x n_in]
  Mat c;                      // [T+1 x n]
  Mat h;                      // [T+1 x n]
  std::array<Mat, 4> gates;   // [T+1 x n], row 0 unused
  Mat y;                      // [T+1 x n_out]

  int steps() const { return static_cast<int>(inputs.rows()); }
};

// Simulates T steps from an all-zero initial state (or `init` when given).
// The readout filter kappa is applied at every step. With record_traj false
// only z and y are kept; state histories are left empty.
inline Trajectory simulate_trial(const CellModel& model,
                                 const NetworkWeights& w, const Mat& inputs,
                                 double kappa, bool record_traj = true,
                                 const NetworkState* init = nullptr) {
  require(!std::holds_alternative<LstmParams>(model),
          "simulate_trial: LSTM uses the LstmWeights overload");
  require(inputs.rows() >= 1, "simulate_trial: need at least one step");
  require(inputs.cols() == w.theta_in.cols(),
          "simulate_trial: input width mismatch");
  const int T = static_cast<int>(inputs.rows());
  const int n = w.n_rec();
  const int n_out = w.n_out();
  const bool adaptive = std::holds_alternative<AlifParams>(model);

  Trajectory traj;
  traj.inputs = inputs;
  traj.z = Mat::Zero(T + 1, n);
  traj.y = Mat::Zero(T + 1, n_out);
  traj.h = Mat::Zero(T + 1, n);
  if (record_traj) {
    traj.v = Mat::Zero(T + 1, n);
    if (adaptive) traj.a = Mat::Zero(T + 1, n);
  }

  NetworkState s = init ? *init : NetworkState::zeros(n, n_out, adaptive);
  traj.z.row(0) = s.z.transpose();
  traj.y.row(0) = s.y.transpose();
  if (record_traj) {
    traj.v.row(0) = s.v.transpose();
    if (adaptive) traj.a.row(0) = s.a.transpose();
  }

  Vec h;
  for (int t = 1; t <= T; ++t) {
    const Vec x_t = inputs.row(t - 1).transpose();
    try {
      if (adaptive) {
        s = alif_step(s, x_t, std::get<AlifParams>(model), w, &h);
      } else if (std::holds_alternative<LifParams>(model)) {
        s = lif_step(s, x_t, std::get<LifParams>(model), w, &h);
      } else {
        s = sigmoid_rnn_step(s, x_t, std::get<SigmoidParams>(model), w, &h);
      }
    } catch (const NumericError& e) {
      throw NumericError(e.what(), t);
    }
    s.y = readout_step(s.y, s.z, w, kappa);
    check_finite(s.v, "membrane state", t);
    check_finite(s.y, "readout", t);
    traj.z.row(t) = s.z.transpose();
    traj.h.row(t) = h.transpose();
    traj.y.row(t) = s.y.transpose();
    if (record_traj) {
      traj.v.row(t) = s.v.transpose();
      if (adaptive) traj.a.row(t) = s.a.transpose();
    }
  }
  return traj;
}

inline LstmTrajectory simulate_trial(const LstmWeights& w, const Mat& inputs,
                                     double kappa, bool record_traj = true,
                                     const LstmState* init = nullptr) {
  require(inputs.rows() >= 1, "simulate_trial: need at least one step");
  require(inputs.cols() == w.w_in[0].cols(),
          "simulate_trial: input width mismatch");
  const int T = static_cast<int>(inputs.rows());
  const int n = w.n_units();

  LstmTrajectory traj;
  traj.inputs = inputs;
  traj.h = Mat::Zero(T + 1, n);
  traj.y = Mat::Zero(T + 1, w.n_out());
  traj.c = Mat::Zero(T + 1, n);
  if (record_traj)
    for (auto& g : traj.gates) g = Mat::Zero(T + 1, n);

  LstmState s = init ? *init : LstmState::zeros(n, w.n_out());
  traj.c.row(0) = s.c.transpose();
  traj.h.row(0) = s.h.transpose();
  traj.y.row(0) = s.y.transpose();

  for (int t = 1; t <= T; ++t) {
    s = lstm_step(s, inputs.row(t - 1).transpose(), w);
    s.y = readout_step(s.y, s.h, w.theta_out, w.b_out, kappa);
    check_finite(s.c, "cell state", t);
    traj.c.row(t) = s.c.transpose();
    traj.h.row(t) = s.h.transpose();
    traj.y.row(t) = s.y.transpose();
    if (record_traj)
      for (int g = 0; g < 4; ++g) traj.gates[g].row(t) = s.gates[g].transpose();
  }
  return traj;
}

}  // namespace traceprop

#endif  // TRACEPROP_DYNAMICS_HPP_
