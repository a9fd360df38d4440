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

#ifndef TRACEPROP_CELLS_HPP_
#define TRACEPROP_CELLS_HPP_

#include <array>
#include <variant>

#include "traceprop/common.hpp"

namespace traceprop {

// Leaky integrate-and-fire neuron constants. alpha is the per-step membrane
// decay exp(-dt/tau_m).
struct LifParams {
  double alpha = 0.0;
  double v_th = 0.0;
  double gamma = 0.3;
  int refractory_steps = 0;
  double dt_ms = 1.0;

  static LifParams from_tau(double tau_m_ms, double v_th, double gamma = 0.3,
                            int refractory_steps = 0, double dt_ms = 1.0) {
    LifParams p;
    p.alpha = decay_from_tau(tau_m_ms, dt_ms);
    p.v_th = v_th;
    p.gamma = gamma;
    p.refractory_steps = refractory_steps;
    p.dt_ms = dt_ms;
    p.validate();
    return p;
  }

  void validate() const {
    require(alpha > 0.0 && alpha < 1.0, "LifParams: alpha must be in (0,1)");
    require(v_th > 0.0, "LifParams: v_th must be positive");
    require(gamma > 0.0, "LifParams: gamma must be positive");
    require(refractory_steps >= 0, "LifParams: refractory_steps must be >= 0");
  }
};

// LIF with an adaptive firing threshold A_j = v_th + beta_j * a_j. beta is
// per-neuron so that networks mixing plain and adaptive neurons are a single
// model (beta_j = 0 reproduces the plain LIF neuron exactly).
struct AlifParams {
  LifParams lif;
  Vec beta;          // [n_rec]
  double rho = 0.0;  // adaptation decay exp(-dt/tau_a)

  static AlifParams make(const LifParams& lif, Vec beta, double tau_a_ms) {
    AlifParams p;
    p.lif = lif;
    p.beta = std::move(beta);
    p.rho = decay_from_tau(tau_a_ms, lif.dt_ms);
    p.validate();
    return p;
  }

  void validate() const {
    lif.validate();
    require(rho > 0.0 && rho < 1.0, "AlifParams: rho must be in (0,1)");
    require((beta.array() >= 0.0).all(), "AlifParams: beta must be >= 0");
  }
};

// Recurrent network of sigmoidal units: s' = alpha*s + W_rec z + W_in x,
// z = logistic(s).
struct SigmoidParams {
  double alpha = 0.0;

  void validate() const {
    require(alpha >= 0.0 && alpha <= 1.0,
            "SigmoidParams: alpha must be in [0,1]");
  }
};

struct LstmParams {
  int n_units = 0;

  void validate() const { require(n_units > 0, "LstmParams: n_units > 0"); }
};

using CellModel = std::variant<LifParams, AlifParams, SigmoidParams, LstmParams>;

inline bool is_spiking(const CellModel& m) {
  return std::holds_alternative<LifParams>(m) ||
         std::holds_alternative<AlifParams>(m);
}

// Weights for the LIF/ALIF/sigmoid family. The recurrent sum excludes the
// self connection, so the diagonal of theta_rec is pinned to zero.
struct NetworkWeights {
  Mat theta_in;   // [n_rec x n_in]
  Mat theta_rec;  // [n_rec x n_rec], zero diagonal
  Mat theta_out;  // [n_out x n_rec]
  Vec b_out;      // [n_out]

  int n_in() const { return static_cast<int>(theta_in.cols()); }
  int n_rec() const { return static_cast<int>(theta_rec.rows()); }
  int n_out() const { return static_cast<int>(theta_out.rows()); }

  static NetworkWeights zeros(int n_in, int n_rec, int n_out) {
    NetworkWeights w;
    w.theta_in = Mat::Zero(n_rec, n_in);
    w.theta_rec = Mat::Zero(n_rec, n_rec);
    w.theta_out = Mat::Zero(n_out, n_rec);
    w.b_out = Vec::Zero(n_out);
    return w;
  }

  void zero_diagonal() { theta_rec.diagonal().setZero(); }

  void validate() const {
    require(theta_rec.rows() == theta_rec.cols(),
            "NetworkWeights: theta_rec must be square");
    require(theta_in.rows() == theta_rec.rows() &&
                theta_out.cols() == theta_rec.rows() &&
                b_out.size() == theta_out.rows(),
            "NetworkWeights: inconsistent block shapes");
    require(theta_rec.diagonal().cwiseAbs().maxCoeff() == 0.0,
            "NetworkWeights: theta_rec diagonal must be zero");
    require(theta_in.allFinite() && theta_rec.allFinite() &&
                theta_out.allFinite() && b_out.allFinite(),
            "NetworkWeights: weights must be finite");
  }
};

// Gate order used for all per-gate arrays.
enum Gate : int { kGateIn = 0, kGateForget = 1, kGateOut = 2, kGateCand = 3 };

// LSTM weights; the four gate blocks each have an input and a recurrent
// part. Gate biases are omitted; the readout keeps its bias.
struct LstmWeights {
  std::array<Mat, 4> w_in;   // each [n_units x n_in]
  std::array<Mat, 4> w_rec;  // each [n_units x n_units]
  Mat theta_out;             // [n_out x n_units]
  Vec b_out;                 // [n_out]

  int n_in() const { return static_cast<int>(w_in[0].cols()); }
  int n_units() const { return static_cast<int>(w_rec[0].rows()); }
  int n_out() const { return static_cast<int>(theta_out.rows()); }

  static LstmWeights zeros(int n_in, int n_units, int n_out) {
    LstmWeights w;
    for (int g = 0; g < 4; ++g) {
      w.w_in[g] = Mat::Zero(n_units, n_in);
      w.w_rec[g] = Mat::Zero(n_units, n_units);
    }
    w.theta_out = Mat::Zero(n_out, n_units);
    w.b_out = Vec::Zero(n_out);
    return w;
  }

  void validate() const {
    for (int g = 0; g < 4; ++g) {
      require(w_in[g].rows() == w_rec[g].rows() &&
                  w_rec[g].rows() == w_rec[g].cols(),
              "LstmWeights: inconsistent gate block shapes");
      require(w_in[g].allFinite() && w_rec[g].allFinite(),
              "LstmWeights: weights must be finite");
    }
    require(theta_out.cols() == w_rec[0].rows() &&
                b_out.size() == theta_out.rows(),
            "LstmWeights: readout shape mismatch");
  }
};

// One time slice of a LIF/ALIF/sigmoid network. For spiking models v holds
// membrane voltages and z the binary spike outputs; for sigmoid units v holds
// the activations s and z the observable outputs. a is empty for models
// without threshold adaptation.
struct NetworkState {
  Vec v;
  Vec a;
  Vec z;
  Eigen::VectorXi refrac;
  Vec y;

  static NetworkState zeros(int n_rec, int n_out, bool adaptive) {
    NetworkState s;
    s.v = Vec::Zero(n_rec);
    s.a = adaptive ? Vec::Zero(n_rec) : Vec();
    s.z = Vec::Zero(n_rec);
    s.refrac = Eigen::VectorXi::Zero(n_rec);
    s.y = Vec::Zero(n_out);
    return s;
  }
};

// One time slice of an LSTM network; the gate activations are cached because
// the eligibility updates and the backward pass both reuse them.
struct LstmState {
  Vec c;
  Vec h;
  std::array<Vec, 4> gates;  // logistic gate values; gates[kGateCand] = tanh
  Vec y;

  static LstmState zeros(int n_units, int n_out) {
    LstmState s;
    s.c = Vec::Zero(n_units);
    s.h = Vec::Zero(n_units);
    for (auto& g : s.gates) g = Vec::Zero(n_units);
    s.y = Vec::Zero(n_out);
    return s;
  }
};

}  // namespace traceprop

#endif  // TRACEPROP_CELLS_HPP_
