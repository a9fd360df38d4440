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

#ifndef TRACEPROP_ELIGIBILITY_HPP_
#define TRACEPROP_ELIGIBILITY_HPP_

#include <array>

#include "traceprop/cells.hpp"
#include "traceprop/common.hpp"

namespace traceprop {

// Per-synapse eligibility state for the LIF/ALIF/sigmoid family, one block
// for input synapses and one for recurrent synapses.
//
// The stepping convention: after the network computed its state at step t
// (spikes z^t, pseudo-derivatives h^t), advance() is called with the
// presynaptic values that entered that state (z^{t-1} for the recurrent
// block, the input consumed by the step for the input block). It leaves
//   zhat_*  = filtered presynaptic trace, the voltage component of the
//             eligibility vector at step t,
//   e_*     = scalar eligibility trace e^t,
//   eps_a_* = adaptation component of the eligibility vector at step t+1
//             (the recursion consumes its previous value before updating).
// With `truncated` the eligibility vector is replaced by the instantaneous
// term only: the presynaptic filter and the adaptation carry are dropped.
struct EligibilityState {
  double alpha = 0.0;  // presynaptic filter decay (the model's alpha)
  double kappa = 0.0;  // decay used by the filtered trace
  bool truncated = false;

  Vec zhat_in, zhat_rec;
  Mat eps_a_in, eps_a_rec;  // ALIF only; zero-size otherwise
  Mat e_in, e_rec;
  Mat f_in, f_rec;  // kappa-filtered copies of e

  static EligibilityState zeros(int n_in, int n_rec, double alpha,
                                double kappa, bool adaptive,
                                bool truncated = false) {
    EligibilityState es;
    es.alpha = alpha;
    es.kappa = kappa;
    es.truncated = truncated;
    es.zhat_in = Vec::Zero(n_in);
    es.zhat_rec = Vec::Zero(n_rec);
    es.e_in = Mat::Zero(n_rec, n_in);
    es.e_rec = Mat::Zero(n_rec, n_rec);
    es.f_in = Mat::Zero(n_rec, n_in);
    es.f_rec = Mat::Zero(n_rec, n_rec);
    if (adaptive) {
      es.eps_a_in = Mat::Zero(n_rec, n_in);
      es.eps_a_rec = Mat::Zero(n_rec, n_rec);
    }
    return es;
  }

  void reset() {
    zhat_in.setZero();
    zhat_rec.setZero();
    e_in.setZero();
    e_rec.setZero();
    f_in.setZero();
    f_rec.setZero();
    if (eps_a_in.size()) {
      eps_a_in.setZero();
      eps_a_rec.setZero();
    }
  }

  void update_presyn(const Vec& x_t, const Vec& z_prev) {
    require(x_t.size() == zhat_in.size() && z_prev.size() == zhat_rec.size(),
            "eligibility: presynaptic shape mismatch");
    if (truncated) {
      zhat_in = x_t;
      zhat_rec = z_prev;
    } else {
      zhat_in = alpha * zhat_in + x_t;
      zhat_rec = alpha * zhat_rec + z_prev;
    }
  }
};

// LIF: e^t = h^t (x) zhat^{t-1}.
inline void elig_update_lif(EligibilityState& es, const Vec& x_t,
                            const Vec& z_prev, const Vec& h_t) {
  es.update_presyn(x_t, z_prev);
  es.e_in.noalias() = h_t * es.zhat_in.transpose();
  es.e_rec.noalias() = h_t * es.zhat_rec.transpose();
}

// ALIF: e^t = h^t (x) (zhat^{t-1} - beta eps_a^t), then
// eps_a^{t+1} = h^t (x) zhat^{t-1} + (rho - beta h^t) eps_a^t.
inline void elig_update_alif(EligibilityState& es, const Vec& x_t,
                             const Vec& z_prev, const Vec& h_t,
                             const AlifParams& p) {
  require(es.eps_a_in.size() > 0, "elig_update_alif: eps_a not allocated");
  es.update_presyn(x_t, z_prev);
  const Arr bh = p.beta.array() * h_t.array();
  es.e_in.noalias() = h_t * es.zhat_in.transpose();
  es.e_rec.noalias() = h_t * es.zhat_rec.transpose();
  if (es.truncated) return;  // adaptation carry dropped entirely
  es.e_in -= (es.eps_a_in.array().colwise() * bh).matrix();
  es.e_rec -= (es.eps_a_rec.array().colwise() * bh).matrix();
  const Arr carry = p.rho - bh;
  es.eps_a_in = (es.eps_a_in.array().colwise() * carry).matrix();
  es.eps_a_in.noalias() += h_t * es.zhat_in.transpose();
  es.eps_a_rec = (es.eps_a_rec.array().colwise() * carry).matrix();
  es.eps_a_rec.noalias() += h_t * es.zhat_rec.transpose();
}

// Sigmoidal units use the exact derivative of the activation in place of the
// pseudo-derivative; the trace structure is the same as for LIF.
inline void elig_update_sigmoid(EligibilityState& es, const Vec& x_t,
                                const Vec& z_prev, const Vec& dz_ds_t) {
  elig_update_lif(es, x_t, z_prev, dz_ds_t);
}

// filtered <- kappa * filtered + e, realizing sum_{t'<=t} kappa^{t-t'} e^{t'}.
inline void elig_filter(EligibilityState& es) {
  es.f_in = es.kappa * es.f_in + es.e_in;
  es.f_rec = es.kappa * es.f_rec + es.e_rec;
}

// Eligibility blocks for the three LSTM gate paths that run through the cell
// state. The output gate has no trace; its gradient is a local product
// handled where learning signals are applied.
enum LstmBlock : int { kBlockInGate = 0, kBlockForgetGate = 1, kBlockCand = 2 };

struct LstmEligibility {
  double kappa = 0.0;
  bool truncated = false;
  std::array<Mat, 3> eps_in, eps_rec;
  std::array<Mat, 3> e_in, e_rec;
  std::array<Mat, 3> f_in, f_rec;

  static LstmEligibility zeros(int n_in, int n_units, double kappa,
                               bool truncated = false) {
    LstmEligibility es;
    es.kappa = kappa;
    es.truncated = truncated;
    for (int b = 0; b < 3; ++b) {
      es.eps_in[b] = Mat::Zero(n_units, n_in);
      es.eps_rec[b] = Mat::Zero(n_units, n_units);
      es.e_in[b] = Mat::Zero(n_units, n_in);
      es.e_rec[b] = Mat::Zero(n_units, n_units);
      es.f_in[b] = Mat::Zero(n_units, n_in);
      es.f_rec[b] = Mat::Zero(n_units, n_units);
    }
    return es;
  }

  void reset() {
    for (int b = 0; b < 3; ++b) {
      eps_in[b].setZero();
      eps_rec[b].setZero();
      e_in[b].setZero();
      e_rec[b].setZero();
      f_in[b].setZero();
      f_rec[b].setZero();
    }
  }
};

// Per-unit derivatives of the new cell state with respect to each gate
// block's pre-activation: dc^t/d(pre_i) = cbar*i*(1-i), dc^t/d(pre_f) =
// c^{t-1}*f*(1-f), dc^t/d(pre_cand) = i*(1-cbar^2).
inline std::array<Arr, 3> lstm_cell_gate_derivs(const LstmState& s,
                                                const Vec& c_prev) {
  const Arr gi = s.gates[kGateIn].array();
  const Arr gf = s.gates[kGateForget].array();
  const Arr cb = s.gates[kGateCand].array();
  return {cb * gi * (1.0 - gi), c_prev.array() * gf * (1.0 - gf),
          gi * (1.0 - cb * cb)};
}

// Advances the LSTM eligibility one step after the network computed state t.
// eps^t = f^t .* eps^{t-1} + dc^t/dtheta, e^t = o^t .* eps^t, with the
// input-block presynaptic value x^t and recurrent-block value h^{t-1}.
inline void elig_update_lstm(LstmEligibility& es, const Vec& x_t,
                             const Vec& h_prev, const LstmState& s_t,
                             const Vec& c_prev) {
  const std::array<Arr, 3> deriv = lstm_cell_gate_derivs(s_t, c_prev);
  const Arr gf = s_t.gates[kGateForget].array();
  const Arr go = s_t.gates[kGateOut].array();
  for (int b = 0; b < 3; ++b) {
    const Vec d = deriv[b].matrix();
    if (es.truncated) {
      es.eps_in[b].noalias() = d * x_t.transpose();
      es.eps_rec[b].noalias() = d * h_prev.transpose();
    } else {
      es.eps_in[b] = (es.eps_in[b].array().colwise() * gf).matrix();
      es.eps_in[b].noalias() += d * x_t.transpose();
      es.eps_rec[b] = (es.eps_rec[b].array().colwise() * gf).matrix();
      es.eps_rec[b].noalias() += d * h_prev.transpose();
    }
    es.e_in[b] = (es.eps_in[b].array().colwise() * go).matrix();
    es.e_rec[b] = (es.eps_rec[b].array().colwise() * go).matrix();
  }
}

inline void elig_filter(LstmEligibility& es) {
  for (int b = 0; b < 3; ++b) {
    es.f_in[b] = es.kappa * es.f_in[b] + es.e_in[b];
    es.f_rec[b] = es.kappa * es.f_rec[b] + es.e_rec[b];
  }
}

}  // namespace traceprop

#endif  // TRACEPROP_ELIGIBILITY_HPP_
