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
//
// Exact full-horizon backward-pass gradients and the checks built on them:
// the factorization identity between forward-propagated eligibility traces
// and the backward pass, and finite-difference verification for smooth
// models. This is the trust anchor for every approximate learning rule in
// the library.

#ifndef TRACEPROP_ORACLE_HPP_
#define TRACEPROP_ORACLE_HPP_

#include <algorithm>
#include <string>
#include <vector>

#include "traceprop/cells.hpp"
#include "traceprop/common.hpp"
#include "traceprop/dynamics.hpp"
#include "traceprop/eligibility.hpp"
#include "traceprop/gradients.hpp"
#include "traceprop/loss.hpp"

namespace traceprop {

// Incoming backward state at an interval boundary: the total derivatives
// with respect to the first readout/neuron states beyond the interval.
// Injecting zeros truncates the gradient; injecting the values from a later
// backward pass makes the interval decomposition exact.
struct RnnCarry {
  Vec dEdy;  // dE/dy^{t1+1}
  Vec gv;    // dE/dv^{t1+1}
  Vec ga;    // dE/da^{t1+1} (zero-size for non-adaptive models)

  static RnnCarry zeros(int n, int n_out, bool adaptive) {
    RnnCarry c;
    c.dEdy = Vec::Zero(n_out);
    c.gv = Vec::Zero(n);
    c.ga = adaptive ? Vec::Zero(n) : Vec();
    return c;
  }
};

// Result of a full backward pass. learning_signals row t holds
// L_j^t = dE/dz_j^t; dEdv / dEda hold dE/ds_j^t per state component.
struct BpttResult {
  RnnGradients grads;
  Mat learning_signals;  // [T+1 x n_rec]
  Mat dEdv;              // [T+1 x n_rec]
  Mat dEda;              // [T+1 x n_rec] (adaptive models only)
  Mat dEdy;              // [T+1 x n_out], total derivative per readout step
  RnnCarry exit;         // backward state after the first step, for chaining
};

// Backward pass over a trajectory (or trajectory segment) for the
// LIF/ALIF/sigmoid family, starting from the given boundary carry. The
// backward recursion is
//   dE/dz_j^t = dE/dy-route + sum_i dE/dv_i^{t+1} d v_i^{t+1}/d z_j^t
//   dE/ds_j^t = L_j^t dz/ds + dE/ds_j^{t+1} D_j^t
// with the same surrogate dz/ds = h that the forward pass recorded. For
// spiking models the derivative of v_j^{t+1} with respect to the neuron's
// own spike is the reset term -v_th; the spike's effect on the adaptation
// variable is part of D (routed within the neuron), matching the eligibility
// recursions so the factorization identity is exact.
inline BpttResult rnn_backward_interval(const Trajectory& traj,
                                        const LossSpec& loss,
                                        const CellModel& model,
                                        const NetworkWeights& w, double kappa,
                                        const RnnCarry& entry) {
  require(traj.v.size() > 0,
          "rnn_backward_interval: trajectory missing state records");
  loss.validate();
  require(loss.steps() == traj.steps(),
          "rnn_backward_interval: loss length mismatch");
  const int T = traj.steps();
  const int n = w.n_rec();
  const bool adaptive = std::holds_alternative<AlifParams>(model);
  const bool spiking = is_spiking(model);

  double alpha = 0.0, v_th = 0.0, rho = 0.0;
  Arr beta;
  if (adaptive) {
    const auto& p = std::get<AlifParams>(model);
    alpha = p.lif.alpha;
    v_th = p.lif.v_th;
    rho = p.rho;
    beta = p.beta.array();
  } else if (spiking) {
    const auto& p = std::get<LifParams>(model);
    alpha = p.alpha;
    v_th = p.v_th;
  } else {
    alpha = std::get<SigmoidParams>(model).alpha;
  }

  BpttResult r;
  r.grads = RnnGradients::zeros(w);
  r.learning_signals = Mat::Zero(T + 1, n);
  r.dEdv = Mat::Zero(T + 1, n);
  r.dEdy = Mat::Zero(T + 1, w.n_out());
  if (adaptive) r.dEda = Mat::Zero(T + 1, n);

  Vec dEdy_next = entry.dEdy;
  Vec gv_next = entry.gv;
  Vec ga_next = adaptive ? entry.ga : Vec::Zero(n);
  require(dEdy_next.size() == w.n_out() && gv_next.size() == n,
          "rnn_backward_interval: carry shape mismatch");
  if (adaptive)
    require(ga_next.size() == n, "rnn_backward_interval: missing ga carry");

  for (int t = T; t >= 1; --t) {
    const Vec y_t = traj.y.row(t).transpose();
    const Vec h_t = traj.h.row(t).transpose();
    const Vec dEdy = loss.dEdy_at(t, y_t) + kappa * dEdy_next;

    Vec L = w.theta_out.transpose() * dEdy;
    L.noalias() += w.theta_rec.transpose() * gv_next;
    if (spiking) L -= v_th * gv_next;  // reset term of the own voltage

    Vec gv = (L.array() * h_t.array()).matrix() + alpha * gv_next;
    Vec ga;
    if (adaptive) {
      const Arr bh = beta * h_t.array();
      gv += (ga_next.array() * h_t.array()).matrix();
      ga = (-L.array() * bh + ga_next.array() * (rho - bh)).matrix();
    }

    const Vec z_prev = traj.z.row(t - 1).transpose();
    const Vec x_t = traj.inputs.row(t - 1).transpose();
    r.grads.d_rec.noalias() += gv * z_prev.transpose();
    r.grads.d_in.noalias() += gv * x_t.transpose();
    r.grads.d_out.noalias() += dEdy * traj.z.row(t);
    r.grads.d_b += dEdy;

    r.learning_signals.row(t) = L.transpose();
    r.dEdv.row(t) = gv.transpose();
    r.dEdy.row(t) = dEdy.transpose();
    if (adaptive) r.dEda.row(t) = ga.transpose();

    dEdy_next = dEdy;
    gv_next = gv;
    if (adaptive) ga_next = ga;
  }
  r.grads.d_rec.diagonal().setZero();
  r.exit.dEdy = dEdy_next;
  r.exit.gv = gv_next;
  if (adaptive) r.exit.ga = ga_next;
  return r;
}

inline BpttResult bptt_gradients(const Trajectory& traj, const LossSpec& loss,
                                 const CellModel& model,
                                 const NetworkWeights& w, double kappa) {
  const bool adaptive = std::holds_alternative<AlifParams>(model);
  return rnn_backward_interval(
      traj, loss, model, w, kappa,
      RnnCarry::zeros(w.n_rec(), w.n_out(), adaptive));
}

inline Mat exact_learning_signals(const Trajectory& traj, const LossSpec& loss,
                                  const CellModel& model,
                                  const NetworkWeights& w, double kappa) {
  return bptt_gradients(traj, loss, model, w, kappa).learning_signals;
}

// Contracts exact learning signals with forward-propagated eligibility
// traces: dE/dtheta_ji = sum_t L_j^t e_ji^t. The readout block has no
// eligibility path and uses the same exact expression as the backward pass.
inline RnnGradients eprop_exact_gradient(const Trajectory& traj,
                                         const LossSpec& loss,
                                         const CellModel& model,
                                         const NetworkWeights& w, double kappa,
                                         bool truncated_elig = false) {
  const BpttResult back = bptt_gradients(traj, loss, model, w, kappa);
  const int T = traj.steps();
  const bool adaptive = std::holds_alternative<AlifParams>(model);

  double alpha = adaptive ? std::get<AlifParams>(model).lif.alpha
                 : is_spiking(model) ? std::get<LifParams>(model).alpha
                                     : std::get<SigmoidParams>(model).alpha;
  EligibilityState es = EligibilityState::zeros(w.n_in(), w.n_rec(), alpha,
                                                /*kappa=*/0.0, adaptive,
                                                truncated_elig);
  RnnGradients g = RnnGradients::zeros(w);
  for (int t = 1; t <= T; ++t) {
    const Vec x_t = traj.inputs.row(t - 1).transpose();
    const Vec z_prev = traj.z.row(t - 1).transpose();
    const Vec h_t = traj.h.row(t).transpose();
    if (adaptive) {
      elig_update_alif(es, x_t, z_prev, h_t, std::get<AlifParams>(model));
    } else {
      elig_update_lif(es, x_t, z_prev, h_t);
    }
    const Arr L = back.learning_signals.row(t).transpose().array();
    g.d_in += (es.e_in.array().colwise() * L).matrix();
    g.d_rec += (es.e_rec.array().colwise() * L).matrix();
  }
  g.d_rec.diagonal().setZero();
  g.d_out = back.grads.d_out;
  g.d_b = back.grads.d_b;
  return g;
}

// Backward state entering an LSTM interval boundary. Beyond the cell-state
// and readout derivatives, the carry holds the gradient routed into the last
// observable state through the following step's gates (route) and that
// step's forget gate (for the cell-state chain).
struct LstmCarry {
  Vec dEdy;   // dE/dy^{t1+1}
  Vec dEdc;   // dE/dc^{t1+1}
  Vec route;  // sum_b W_rec[b]^T pregrad^{t1+1}[b], the h^{t1} route
  Arr gf;     // forget gate at step t1+1

  static LstmCarry zeros(int n, int n_out) {
    LstmCarry c;
    c.dEdy = Vec::Zero(n_out);
    c.dEdc = Vec::Zero(n);
    c.route = Vec::Zero(n);
    c.gf = Arr::Zero(n);
    return c;
  }
};

struct LstmBpttResult {
  LstmGradients grads;
  Mat learning_signals;  // [T+1 x n], dE/dh_j^t
  Mat dEdc;              // [T+1 x n]
  Mat dEdy;              // [T+1 x n_out]
  LstmCarry exit;
};

// Backward pass over an LSTM trajectory (or segment) starting from the given
// carry. The observable state h feeds the next step's four gates and the
// readout; the cell state chains through the forget gate. The output gate
// makes h depend on the previous observable state directly, which the
// recursion routes between observable nodes.
inline LstmBpttResult lstm_backward_interval(const LstmTrajectory& traj,
                                             const LossSpec& loss,
                                             const LstmWeights& w, double kappa,
                                             const LstmCarry& entry) {
  require(traj.gates[0].size() > 0,
          "lstm_backward_interval: trajectory missing gate records");
  loss.validate();
  require(loss.steps() == traj.steps(),
          "lstm_backward_interval: loss length mismatch");
  const int T = traj.steps();
  const int n = w.n_units();

  LstmBpttResult r;
  r.grads = LstmGradients::zeros(w);
  r.learning_signals = Mat::Zero(T + 1, n);
  r.dEdc = Mat::Zero(T + 1, n);
  r.dEdy = Mat::Zero(T + 1, w.n_out());

  Vec dEdy_next = entry.dEdy;
  Vec dEdc_next = entry.dEdc;
  Vec route_prev = entry.route;
  Arr gf_next = entry.gf;
  require(dEdy_next.size() == w.n_out() && dEdc_next.size() == n &&
              route_prev.size() == n && gf_next.size() == n,
          "lstm_backward_interval: carry shape mismatch");

  for (int t = T; t >= 1; --t) {
    const Vec dEdy = loss.dEdy_at(t, traj.y.row(t).transpose()) +
                     kappa * dEdy_next;
    Vec L = w.theta_out.transpose() * dEdy;
    L += route_prev;

    const Arr go = traj.gates[kGateOut].row(t).transpose().array();
    const Vec dEdc =
        ((L.array() * go) + dEdc_next.array() * gf_next).matrix();

    const Arr gi = traj.gates[kGateIn].row(t).transpose().array();
    const Arr gf = traj.gates[kGateForget].row(t).transpose().array();
    const Arr cb = traj.gates[kGateCand].row(t).transpose().array();
    const Arr c_prev = traj.c.row(t - 1).transpose().array();
    const Arr c_t = traj.c.row(t).transpose().array();

    std::array<Vec, 4> pregrad;
    pregrad[kGateIn] = (dEdc.array() * cb * gi * (1.0 - gi)).matrix();
    pregrad[kGateForget] = (dEdc.array() * c_prev * gf * (1.0 - gf)).matrix();
    pregrad[kGateCand] = (dEdc.array() * gi * (1.0 - cb * cb)).matrix();
    pregrad[kGateOut] = (L.array() * c_t * go * (1.0 - go)).matrix();

    const Vec x_t = traj.inputs.row(t - 1).transpose();
    const Vec h_prev = traj.h.row(t - 1).transpose();
    route_prev.setZero();
    for (int b = 0; b < 4; ++b) {
      r.grads.d_in[b].noalias() += pregrad[b] * x_t.transpose();
      r.grads.d_rec[b].noalias() += pregrad[b] * h_prev.transpose();
      route_prev.noalias() += w.w_rec[b].transpose() * pregrad[b];
    }
    r.grads.d_out.noalias() += dEdy * traj.h.row(t);
    r.grads.d_b += dEdy;

    r.learning_signals.row(t) = L.transpose();
    r.dEdc.row(t) = dEdc.transpose();
    r.dEdy.row(t) = dEdy.transpose();
    dEdy_next = dEdy;
    dEdc_next = dEdc;
    gf_next = gf;
  }
  r.exit.dEdy = dEdy_next;
  r.exit.dEdc = dEdc_next;
  r.exit.route = route_prev;
  r.exit.gf = gf_next;
  return r;
}

inline LstmBpttResult bptt_gradients(const LstmTrajectory& traj,
                                     const LossSpec& loss,
                                     const LstmWeights& w, double kappa) {
  return lstm_backward_interval(traj, loss, w, kappa,
                                LstmCarry::zeros(w.n_units(), w.n_out()));
}

// e-prop form of the LSTM gradients: forward eligibility traces for the
// input-gate, forget-gate, and candidate blocks contracted with the exact
// learning signals; the output-gate block is the same local product both
// routes share.
inline LstmGradients eprop_exact_gradient(const LstmTrajectory& traj,
                                          const LossSpec& loss,
                                          const LstmWeights& w, double kappa,
                                          bool truncated_elig = false) {
  const LstmBpttResult back = bptt_gradients(traj, loss, w, kappa);
  const int T = traj.steps();
  LstmEligibility es =
      LstmEligibility::zeros(w.n_in(), w.n_units(), 0.0, truncated_elig);
  LstmGradients g = LstmGradients::zeros(w);

  LstmState s_t = LstmState::zeros(w.n_units(), w.n_out());
  for (int t = 1; t <= T; ++t) {
    const Vec x_t = traj.inputs.row(t - 1).transpose();
    const Vec h_prev = traj.h.row(t - 1).transpose();
    const Vec c_prev = traj.c.row(t - 1).transpose();
    s_t.c = traj.c.row(t).transpose();
    for (int gate = 0; gate < 4; ++gate)
      s_t.gates[gate] = traj.gates[gate].row(t).transpose();
    elig_update_lstm(es, x_t, h_prev, s_t, c_prev);

    const Arr L = back.learning_signals.row(t).transpose().array();
    static constexpr int kGateOf[3] = {kGateIn, kGateForget, kGateCand};
    for (int b = 0; b < 3; ++b) {
      g.d_in[kGateOf[b]] += (es.e_in[b].array().colwise() * L).matrix();
      g.d_rec[kGateOf[b]] += (es.e_rec[b].array().colwise() * L).matrix();
    }
    const Arr go = s_t.gates[kGateOut].array();
    const Vec og = (L * s_t.c.array() * go * (1.0 - go)).matrix();
    g.d_in[kGateOut].noalias() += og * x_t.transpose();
    g.d_rec[kGateOut].noalias() += og * h_prev.transpose();
  }
  g.d_out = back.grads.d_out;
  g.d_b = back.grads.d_b;
  return g;
}

// Central finite differences for smooth models. Spiking models are rejected:
// their step nonlinearity makes the loss piecewise constant in the weights,
// so difference quotients do not approximate the surrogate gradient.
inline RnnGradients finite_difference_gradient(const CellModel& model,
                                               NetworkWeights w,
                                               const Mat& inputs,
                                               const LossSpec& loss,
                                               double kappa,
                                               double h_step = 1e-5) {
  require(!is_spiking(model),
          "finite_difference_gradient: unsupported spiking model");
  auto eval = [&](const NetworkWeights& wt) {
    return loss.total(simulate_trial(model, wt, inputs, kappa, false).y);
  };
  RnnGradients g = RnnGradients::zeros(w);
  auto sweep = [&](Mat& param, Mat& out) {
    for (int i = 0; i < param.rows(); ++i)
      for (int j = 0; j < param.cols(); ++j) {
        if (&param == &w.theta_rec && i == j) continue;
        const double saved = param(i, j);
        param(i, j) = saved + h_step;
        const double ep = eval(w);
        param(i, j) = saved - h_step;
        const double em = eval(w);
        param(i, j) = saved;
        out(i, j) = (ep - em) / (2.0 * h_step);
      }
  };
  sweep(w.theta_in, g.d_in);
  sweep(w.theta_rec, g.d_rec);
  sweep(w.theta_out, g.d_out);
  for (int k = 0; k < w.b_out.size(); ++k) {
    const double saved = w.b_out[k];
    w.b_out[k] = saved + h_step;
    const double ep = eval(w);
    w.b_out[k] = saved - h_step;
    const double em = eval(w);
    w.b_out[k] = saved;
    g.d_b[k] = (ep - em) / (2.0 * h_step);
  }
  return g;
}

inline LstmGradients finite_difference_gradient(LstmWeights w,
                                                const Mat& inputs,
                                                const LossSpec& loss,
                                                double kappa,
                                                double h_step = 1e-5) {
  auto eval = [&](const LstmWeights& wt) {
    return loss.total(simulate_trial(wt, inputs, kappa, false).y);
  };
  LstmGradients g = LstmGradients::zeros(w);
  auto sweep = [&](Mat& param, Mat& out) {
    for (int i = 0; i < param.rows(); ++i)
      for (int j = 0; j < param.cols(); ++j) {
        const double saved = param(i, j);
        param(i, j) = saved + h_step;
        const double ep = eval(w);
        param(i, j) = saved - h_step;
        const double em = eval(w);
        param(i, j) = saved;
        out(i, j) = (ep - em) / (2.0 * h_step);
      }
  };
  for (int b = 0; b < 4; ++b) {
    sweep(w.w_in[b], g.d_in[b]);
    sweep(w.w_rec[b], g.d_rec[b]);
  }
  sweep(w.theta_out, g.d_out);
  for (int k = 0; k < w.b_out.size(); ++k) {
    const double saved = w.b_out[k];
    w.b_out[k] = saved + h_step;
    const double ep = eval(w);
    w.b_out[k] = saved - h_step;
    const double em = eval(w);
    w.b_out[k] = saved;
    g.d_b[k] = (ep - em) / (2.0 * h_step);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Randomized instances and the identity-verification suite.

struct OracleInstance {
  CellModel model;
  NetworkWeights w;
  Mat inputs;
  LossSpec loss;
  double kappa = 0.0;
};

namespace detail {

inline LossSpec random_loss(std::mt19937_64& rng, int T, int n_out,
                            bool classification) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, n_out - 1);
  LossSpec loss;
  loss.kind = classification ? LossKind::kCrossEntropy : LossKind::kMse;
  loss.targets = Mat::Zero(T, n_out);
  loss.mask = Vec::Ones(T);
  for (int t = 0; t < T; ++t) {
    if (u(rng) < 0.3) loss.mask[t] = 0.0;
    if (classification) {
      loss.targets(t, cls(rng)) = 1.0;
    } else {
      for (int k = 0; k < n_out; ++k) loss.targets(t, k) = dist(rng);
    }
  }
  return loss;
}

}  // namespace detail

// Random network with Gaussian 1/sqrt(fan-in) weights and Bernoulli spike
// inputs, exercising both spiking and silent regimes.
inline OracleInstance random_rnn_instance(std::mt19937_64& rng,
                                          const std::string& kind, int n_max = 8,
                                          int t_max = 50, int t_min = 8) {
  std::uniform_int_distribution<int> nd(3, n_max), td(std::min(t_min, t_max), t_max), od(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = nd(rng);
  const int n_in = nd(rng);
  const int n_out = od(rng);
  const int T = td(rng);

  OracleInstance inst;
  inst.w.theta_in =
      gaussian_matrix(rng, n, n_in, 2.0 / std::sqrt(n_in));
  inst.w.theta_rec = gaussian_matrix(rng, n, n, 1.5 / std::sqrt(n));
  inst.w.theta_rec.diagonal().setZero();
  inst.w.theta_out = gaussian_matrix(rng, n_out, n, 1.0 / std::sqrt(n));
  inst.w.b_out = gaussian_matrix(rng, n_out, 1, 0.3).col(0);

  const double kappas[3] = {0.0, std::exp(-1.0 / 3.0), std::exp(-1.0 / 20.0)};
  inst.kappa = kappas[std::uniform_int_distribution<int>(0, 2)(rng)];

  if (kind == "sigmoid") {
    SigmoidParams p;
    p.alpha = u(rng);
    inst.model = p;
    inst.inputs = gaussian_matrix(rng, T, n_in, 1.0);
  } else {
    LifParams lif;
    lif.v_th = 0.4 + 0.5 * u(rng);
    lif.alpha = std::exp(-1.0 / (10.0 + 20.0 * u(rng)));
    lif.gamma = 0.3;
    lif.refractory_steps = std::uniform_int_distribution<int>(0, 3)(rng);
    if (kind == "alif") {
      AlifParams p;
      p.lif = lif;
      p.rho = std::exp(-1.0 / (50.0 + 250.0 * u(rng)));
      p.beta = (0.05 + 0.4 * u(rng)) * Vec::Ones(n);
      inst.model = p;
    } else {
      inst.model = lif;
    }
    inst.inputs = bernoulli_matrix(rng, T, n_in, 0.05 + 0.25 * u(rng));
  }
  inst.loss = detail::random_loss(rng, T, n_out, u(rng) < 0.4);
  return inst;
}

struct LstmInstance {
  LstmWeights w;
  Mat inputs;
  LossSpec loss;
  double kappa = 0.0;
};

inline LstmInstance random_lstm_instance(std::mt19937_64& rng, int n_max = 6,
                                         int t_max = 30, int t_min = 6) {
  std::uniform_int_distribution<int> nd(2, n_max), td(std::min(t_min, t_max), t_max), od(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = nd(rng);
  const int n_in = nd(rng);
  const int n_out = od(rng);
  const int T = td(rng);

  LstmInstance inst;
  for (int b = 0; b < 4; ++b) {
    inst.w.w_in[b] =
        gaussian_matrix(rng, n, n_in, 1.0 / std::sqrt(n_in));
    inst.w.w_rec[b] = gaussian_matrix(rng, n, n, 1.0 / std::sqrt(n));
  }
  inst.w.theta_out = gaussian_matrix(rng, n_out, n, 1.0 / std::sqrt(n));
  inst.w.b_out = gaussian_matrix(rng, n_out, 1, 0.3).col(0);
  inst.inputs = gaussian_matrix(rng, T, n_in, 1.0);
  inst.kappa = u(rng) < 0.5 ? 0.0 : std::exp(-1.0 / 5.0);
  inst.loss = detail::random_loss(rng, T, n_out, u(rng) < 0.4);
  return inst;
}

// Machine-readable outcome of one identity suite, exported for CI.
struct VerifierReport {
  std::string model;
  int instances = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Runs the factorization identity over randomized instances of one model
// family ("lif", "alif", "sigmoid", "lstm"). With truncated_elig the suite
// measures the gap left by dropping the eligibility carry, which must be
// nonzero on instances with temporal structure.
inline VerifierReport run_factorization_suite(const std::string& model,
                                              int instances,
                                              std::uint64_t seed,
                                              double tolerance = 1e-10,
                                              bool truncated_elig = false) {
  VerifierReport report;
  report.model = model;
  report.instances = instances;
  report.tolerance = tolerance;
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    auto rng = make_rng(seed, i);
    if (model == "lstm") {
      const LstmInstance inst = random_lstm_instance(rng);
      const LstmTrajectory traj =
          simulate_trial(inst.w, inst.inputs, inst.kappa);
      const LstmBpttResult back =
          bptt_gradients(traj, inst.loss, inst.w, inst.kappa);
      const LstmGradients ep = eprop_exact_gradient(traj, inst.loss, inst.w,
                                                    inst.kappa, truncated_elig);
      worst = std::max(worst, max_relative_error(ep, back.grads));
    } else {
      const OracleInstance inst = random_rnn_instance(rng, model);
      const Trajectory traj =
          simulate_trial(inst.model, inst.w, inst.inputs, inst.kappa);
      const BpttResult back =
          bptt_gradients(traj, inst.loss, inst.model, inst.w, inst.kappa);
      const RnnGradients ep = eprop_exact_gradient(
          traj, inst.loss, inst.model, inst.w, inst.kappa, truncated_elig);
      worst = std::max(worst, max_relative_error(ep, back.grads));
    }
  }
  report.max_rel_error = worst;
  report.pass = worst < tolerance;
  return report;
}

}  // namespace traceprop

#endif  // TRACEPROP_ORACLE_HPP_
