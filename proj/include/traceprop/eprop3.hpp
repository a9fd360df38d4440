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
// Interval-truncated training: gradients are computed over windows of
// delta_t steps with a boundary condition at the far edge (zero, a learned
// synthetic gradient, or an injected exact value), optionally combined with
// eligibility traces that carry network history across the truncation
// points.

#ifndef TRACEPROP_EPROP3_HPP_
#define TRACEPROP_EPROP3_HPP_

#include <string>
#include <vector>

#include "traceprop/eligibility.hpp"
#include "traceprop/oracle.hpp"
#include "traceprop/optimizer.hpp"

namespace traceprop {

// The interval-training schemes compared on the copy-repeat benchmark, plus
// the broadcast-free single-pass rule for reference.
enum class IntervalScheme {
  kTruncatedBptt,   // backward within the interval, zero boundary
  kBpttSg,          // backward within the interval, synthetic boundary
  kTruncatedElig,   // trace-based gradients, zero boundary
  kEprop3,          // trace-based gradients, synthetic boundary
  kEprop1,          // instantaneous learning signals, no backward pass
};

inline IntervalScheme interval_scheme_from_string(const std::string& s) {
  if (s == "truncated-bptt") return IntervalScheme::kTruncatedBptt;
  if (s == "bptt+sg") return IntervalScheme::kBpttSg;
  if (s == "truncated-elig") return IntervalScheme::kTruncatedElig;
  if (s == "eprop3") return IntervalScheme::kEprop3;
  if (s == "eprop1") return IntervalScheme::kEprop1;
  throw ConfigError("unknown interval scheme: " + s);
}

inline bool scheme_uses_traces(IntervalScheme m) {
  return m == IntervalScheme::kTruncatedElig || m == IntervalScheme::kEprop3 ||
         m == IntervalScheme::kEprop1;
}

inline bool scheme_uses_sg(IntervalScheme m) {
  return m == IntervalScheme::kBpttSg || m == IntervalScheme::kEprop3;
}

struct TruncationConfig {
  int delta_t = 4;
  double eta_sg = 0.1;  // scales the boundary term when a SG net provides it
  IntervalScheme mode = IntervalScheme::kEprop3;

  void validate() const {
    require(delta_t >= 1, "TruncationConfig: delta_t must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Trajectory and loss slicing (used by the oracle-injection checks, which
// work on a fully recorded trial).

// Segment covering steps [t0, t1] of a recorded trajectory; local row 0 is
// the carried state at t0 - 1.
inline Trajectory slice_trajectory(const Trajectory& traj, int t0, int t1) {
  require(t0 >= 1 && t1 <= traj.steps() && t0 <= t1,
          "slice_trajectory: bad interval");
  const int len = t1 - t0 + 1;
  Trajectory seg;
  seg.inputs = traj.inputs.middleRows(t0 - 1, len);
  seg.v = traj.v.middleRows(t0 - 1, len + 1);
  if (traj.a.size()) seg.a = traj.a.middleRows(t0 - 1, len + 1);
  seg.z = traj.z.middleRows(t0 - 1, len + 1);
  seg.h = traj.h.middleRows(t0 - 1, len + 1);
  seg.y = traj.y.middleRows(t0 - 1, len + 1);
  return seg;
}

inline LstmTrajectory slice_trajectory(const LstmTrajectory& traj, int t0,
                                       int t1) {
  require(t0 >= 1 && t1 <= traj.steps() && t0 <= t1,
          "slice_trajectory: bad interval");
  const int len = t1 - t0 + 1;
  LstmTrajectory seg;
  seg.inputs = traj.inputs.middleRows(t0 - 1, len);
  seg.c = traj.c.middleRows(t0 - 1, len + 1);
  seg.h = traj.h.middleRows(t0 - 1, len + 1);
  for (int g = 0; g < 4; ++g)
    seg.gates[g] = traj.gates[g].middleRows(t0 - 1, len + 1);
  seg.y = traj.y.middleRows(t0 - 1, len + 1);
  return seg;
}

inline LossSpec slice_loss(const LossSpec& loss, int t0, int t1) {
  LossSpec seg;
  seg.kind = loss.kind;
  seg.targets = loss.targets.middleRows(t0 - 1, t1 - t0 + 1);
  seg.mask = loss.mask.segment(t0 - 1, t1 - t0 + 1);
  return seg;
}

// Exact interval-entry carries, obtained by chaining partial backward passes
// from the end of the trial: carries[m] is the true boundary condition for
// interval m. The final interval's boundary is trivially zero.
inline std::vector<RnnCarry> true_interval_carries(
    const Trajectory& traj, const LossSpec& loss, const CellModel& model,
    const NetworkWeights& w, double kappa, int delta_t) {
  const int T = traj.steps();
  require(T % delta_t == 0, "true_interval_carries: T must be K*delta_t");
  const int K = T / delta_t;
  const bool adaptive = std::holds_alternative<AlifParams>(model);
  std::vector<RnnCarry> carries(K);
  RnnCarry carry = RnnCarry::zeros(w.n_rec(), w.n_out(), adaptive);
  for (int m = K - 1; m >= 0; --m) {
    carries[m] = carry;
    const int t0 = m * delta_t + 1, t1 = (m + 1) * delta_t;
    const BpttResult res =
        rnn_backward_interval(slice_trajectory(traj, t0, t1),
                              slice_loss(loss, t0, t1), model, w, kappa, carry);
    carry = res.exit;
  }
  return carries;
}

inline std::vector<LstmCarry> true_interval_carries(
    const LstmTrajectory& traj, const LossSpec& loss, const LstmWeights& w,
    double kappa, int delta_t) {
  const int T = traj.steps();
  require(T % delta_t == 0, "true_interval_carries: T must be K*delta_t");
  const int K = T / delta_t;
  std::vector<LstmCarry> carries(K);
  LstmCarry carry = LstmCarry::zeros(w.n_units(), w.n_out());
  for (int m = K - 1; m >= 0; --m) {
    carries[m] = carry;
    const int t0 = m * delta_t + 1, t1 = (m + 1) * delta_t;
    const LstmBpttResult res =
        lstm_backward_interval(slice_trajectory(traj, t0, t1),
                               slice_loss(loss, t0, t1), w, kappa, carry);
    carry = res.exit;
  }
  return carries;
}

// ---------------------------------------------------------------------------
// Interval gradient estimators.

// Trace-based interval contribution g_m = sum_{t in interval} L_t * e_t.
// `signals` rows 1..len are the boundary-inclusive learning signals of the
// interval backward pass; `es` carries eligibility across interval
// boundaries and is advanced in place. Writes into g_in / g_rec.
inline void rnn_eprop_interval_gradient(const Trajectory& seg,
                                        const CellModel& model,
                                        const Mat& signals,
                                        EligibilityState& es, Mat* g_in,
                                        Mat* g_rec) {
  const bool adaptive = std::holds_alternative<AlifParams>(model);
  for (int t = 1; t <= seg.steps(); ++t) {
    const Vec x_t = seg.inputs.row(t - 1).transpose();
    const Vec z_prev = seg.z.row(t - 1).transpose();
    const Vec h_t = seg.h.row(t).transpose();
    if (adaptive) {
      elig_update_alif(es, x_t, z_prev, h_t, std::get<AlifParams>(model));
    } else {
      elig_update_lif(es, x_t, z_prev, h_t);
    }
    const Arr L = signals.row(t).transpose().array();
    *g_in += (es.e_in.array().colwise() * L).matrix();
    *g_rec += (es.e_rec.array().colwise() * L).matrix();
  }
  g_rec->diagonal().setZero();
}

inline void lstm_eprop_interval_gradient(const LstmTrajectory& seg,
                                         const Mat& signals,
                                         LstmEligibility& es,
                                         LstmGradients* g) {
  LstmState s_t;
  for (int t = 1; t <= seg.steps(); ++t) {
    const Vec x_t = seg.inputs.row(t - 1).transpose();
    const Vec h_prev = seg.h.row(t - 1).transpose();
    const Vec c_prev = seg.c.row(t - 1).transpose();
    s_t.c = seg.c.row(t).transpose();
    for (int gate = 0; gate < 4; ++gate)
      s_t.gates[gate] = seg.gates[gate].row(t).transpose();
    elig_update_lstm(es, x_t, h_prev, s_t, c_prev);

    const Arr L = signals.row(t).transpose().array();
    static constexpr int kGateOf[3] = {kGateIn, kGateForget, kGateCand};
    for (int b = 0; b < 3; ++b) {
      g->d_in[kGateOf[b]] += (es.e_in[b].array().colwise() * L).matrix();
      g->d_rec[kGateOf[b]] += (es.e_rec[b].array().colwise() * L).matrix();
    }
    const Arr go = s_t.gates[kGateOut].array();
    const Vec og = (L * s_t.c.array() * go * (1.0 - go)).matrix();
    g->d_in[kGateOut].noalias() += og * x_t.transpose();
    g->d_rec[kGateOut].noalias() += og * h_prev.transpose();
  }
}

// Interval estimate for one scheme over a recorded segment. For trace-based
// schemes the backward pass supplies boundary-inclusive learning signals and
// the exact readout gradients, while the recurrent/input blocks come from
// the carried eligibility traces.
inline RnnGradients rnn_interval_gradient(const Trajectory& seg,
                                          const LossSpec& seg_loss,
                                          const CellModel& model,
                                          const NetworkWeights& w, double kappa,
                                          const RnnCarry& boundary,
                                          IntervalScheme mode,
                                          EligibilityState* es,
                                          RnnCarry* exit = nullptr) {
  const BpttResult back =
      rnn_backward_interval(seg, seg_loss, model, w, kappa, boundary);
  if (exit) *exit = back.exit;
  if (!scheme_uses_traces(mode)) return back.grads;

  require(es != nullptr, "rnn_interval_gradient: missing eligibility state");
  RnnGradients g = RnnGradients::zeros(w);
  g.d_out = back.grads.d_out;
  g.d_b = back.grads.d_b;
  rnn_eprop_interval_gradient(seg, model, back.learning_signals, *es, &g.d_in,
                              &g.d_rec);
  return g;
}

inline LstmGradients lstm_interval_gradient(const LstmTrajectory& seg,
                                            const LossSpec& seg_loss,
                                            const LstmWeights& w, double kappa,
                                            const LstmCarry& boundary,
                                            IntervalScheme mode,
                                            LstmEligibility* es,
                                            LstmCarry* exit = nullptr) {
  const LstmBpttResult back =
      lstm_backward_interval(seg, seg_loss, w, kappa, boundary);
  if (exit) *exit = back.exit;
  if (!scheme_uses_traces(mode)) return back.grads;

  require(es != nullptr, "lstm_interval_gradient: missing eligibility state");
  LstmGradients g = LstmGradients::zeros(w);
  g.d_out = back.grads.d_out;
  g.d_b = back.grads.d_b;
  lstm_eprop_interval_gradient(seg, back.learning_signals, *es, &g);
  return g;
}

// ---------------------------------------------------------------------------
// Synthetic gradient module: one hidden layer of rectified linear units and
// a linear output of one boundary-gradient entry per neuron state component.

struct SgGradients {
  Mat d_w1, d_w2;
  Vec d_b1, d_b2;

  void setZero() {
    d_w1.setZero();
    d_w2.setZero();
    d_b1.setZero();
    d_b2.setZero();
  }

  SgGradients& operator+=(const SgGradients& o) {
    d_w1 += o.d_w1;
    d_w2 += o.d_w2;
    d_b1 += o.d_b1;
    d_b2 += o.d_b2;
    return *this;
  }
};

struct SyntheticGradientNet {
  Mat w1;  // [hidden x n_obs]
  Vec b1;  // [hidden]
  Mat w2;  // [out x hidden], zero-initialized so SG starts at 0
  Vec b2;  // [out]

  static SyntheticGradientNet init(int n_obs, int out_dim, int hidden,
                                   std::mt19937_64& rng) {
    SyntheticGradientNet net;
    net.w1 = gaussian_matrix(rng, hidden, n_obs, 1.0 / std::sqrt(n_obs));
    net.b1 = Vec::Zero(hidden);
    net.w2 = Mat::Zero(out_dim, hidden);
    net.b2 = Vec::Zero(out_dim);
    return net;
  }

  Vec forward(const Vec& z) const {
    require(z.size() == w1.cols(), "SyntheticGradientNet: input shape");
    Vec hidden = b1;
    hidden.noalias() += w1 * z;
    hidden = hidden.cwiseMax(0.0);
    Vec out = b2;
    out.noalias() += w2 * hidden;
    return out;
  }

  // Accumulates d/dPsi of 0.5 * |forward(z) - target|^2; returns the loss.
  double grad(const Vec& z, const Vec& target, SgGradients* g) const {
    Vec pre = b1;
    pre.noalias() += w1 * z;
    const Vec hidden = pre.cwiseMax(0.0);
    Vec out = b2;
    out.noalias() += w2 * hidden;
    const Vec d_out = out - target;
    g->d_w2.noalias() += d_out * hidden.transpose();
    g->d_b2 += d_out;
    Vec d_hidden = w2.transpose() * d_out;
    for (int i = 0; i < d_hidden.size(); ++i)
      if (pre[i] <= 0.0) d_hidden[i] = 0.0;
    g->d_w1.noalias() += d_hidden * z.transpose();
    g->d_b1 += d_hidden;
    return 0.5 * d_out.squaredNorm();
  }

  SgGradients zero_grads() const {
    SgGradients g;
    g.d_w1 = Mat::Zero(w1.rows(), w1.cols());
    g.d_w2 = Mat::Zero(w2.rows(), w2.cols());
    g.d_b1 = Vec::Zero(b1.size());
    g.d_b2 = Vec::Zero(b2.size());
    return g;
  }
};

inline std::vector<long> adam_block_sizes(const SyntheticGradientNet& net) {
  return {net.w1.size(), net.b1.size(), net.w2.size(), net.b2.size()};
}

inline void adam_update(SyntheticGradientNet& net, const SgGradients& g,
                        AdamState& st, double rate) {
  require(st.m.size() == 4, "adam_update: state not initialized for SG net");
  ++st.step;
  detail::adam_block(detail::flat(net.w1), detail::cflat(g.d_w1), st, 0, rate);
  detail::adam_block(detail::flat(net.b1), detail::cflat(g.d_b1), st, 1, rate);
  detail::adam_block(detail::flat(net.w2), detail::cflat(g.d_w2), st, 2, rate);
  detail::adam_block(detail::flat(net.b2), detail::cflat(g.d_b2), st, 3, rate);
}

// Boundary carry from a synthetic-gradient prediction for the LIF/ALIF and
// sigmoid families. The SG output stacks the per-state components:
// [dE/dv (n)] or [dE/dv (n); dE/da (n)].
inline RnnCarry carry_from_sg(const Vec& sg_out, double eta_sg, int n,
                              int n_out, bool adaptive) {
  require(sg_out.size() == (adaptive ? 2 * n : n),
          "carry_from_sg: output dimension mismatch");
  RnnCarry c = RnnCarry::zeros(n, n_out, adaptive);
  c.gv = eta_sg * sg_out.head(n);
  if (adaptive) c.ga = eta_sg * sg_out.tail(n);
  return c;
}

// Forward data of the first step beyond an LSTM interval, needed to route a
// boundary cell-state gradient into the interval's last observable state.
struct LstmBoundaryLink {
  std::array<Vec, 4> gates;  // gates at step t1+1
  Vec c_prev;                // c^{t1}
  Vec c_next;                // c^{t1+1}
};

inline LstmBoundaryLink lstm_link_from_segment(const LstmTrajectory& next_seg) {
  LstmBoundaryLink link;
  for (int g = 0; g < 4; ++g)
    link.gates[g] = next_seg.gates[g].row(1).transpose();
  link.c_prev = next_seg.c.row(0).transpose();
  link.c_next = next_seg.c.row(1).transpose();
  return link;
}

// Boundary carry from a synthetic cell-state gradient. With a link the
// routing through the next step's gates is exact; without one (at the far
// edge of the lookahead window, where the following interval has not been
// simulated yet) the carry keeps only the cell-state chain, continued with
// the segment's final forget gate.
inline LstmCarry carry_from_sg(const Vec& sg_dEdc, double eta_sg,
                               const LstmWeights& w,
                               const LstmBoundaryLink* link,
                               const Arr& gf_fallback) {
  const int n = w.n_units();
  require(sg_dEdc.size() == n, "carry_from_sg: output dimension mismatch");
  LstmCarry c = LstmCarry::zeros(n, w.n_out());
  c.dEdc = eta_sg * sg_dEdc;
  if (link) {
    const Arr gi = link->gates[kGateIn].array();
    const Arr gf = link->gates[kGateForget].array();
    const Arr cb = link->gates[kGateCand].array();
    const Arr dEdc = c.dEdc.array();
    const Vec pg_in = (dEdc * cb * gi * (1.0 - gi)).matrix();
    const Vec pg_forget =
        (dEdc * link->c_prev.array() * gf * (1.0 - gf)).matrix();
    const Vec pg_cand = (dEdc * gi * (1.0 - cb * cb)).matrix();
    c.route = w.w_rec[kGateIn].transpose() * pg_in;
    c.route.noalias() += w.w_rec[kGateForget].transpose() * pg_forget;
    c.route.noalias() += w.w_rec[kGateCand].transpose() * pg_cand;
    c.gf = gf;
  } else {
    c.gf = gf_fallback;
  }
  return c;
}

}  // namespace traceprop

#endif  // TRACEPROP_EPROP3_HPP_
