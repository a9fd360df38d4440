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
// Online learning signals: error broadcasts through fixed random (or tied)
// feedback weights, the filtered-trace weight updates they drive, readout
// gradients, firing-rate regularization, and the voltage-based postsynaptic
// variant of the plasticity rule.

#ifndef TRACEPROP_LEARNING_SIGNALS_HPP_
#define TRACEPROP_LEARNING_SIGNALS_HPP_

#include <vector>

#include "traceprop/cells.hpp"
#include "traceprop/common.hpp"
#include "traceprop/eligibility.hpp"
#include "traceprop/gradients.hpp"
#include "traceprop/loss.hpp"

namespace traceprop {

enum class FeedbackKind { kRandom, kSymmetric, kUniform };

// Error-broadcast weights B [n_rec x n_out]. Random feedback is sampled once
// and then fixed; symmetric feedback mirrors the current readout weights and
// is refreshed on every use; uniform feedback sends the same global signal
// 1/sqrt(n) to every neuron.
struct FeedbackMatrix {
  FeedbackKind kind = FeedbackKind::kRandom;
  double variance = 0.0;
  Mat B;

  static FeedbackMatrix random(int n_rec, int n_out, std::mt19937_64& rng,
                               double variance) {
    FeedbackMatrix fb;
    fb.kind = FeedbackKind::kRandom;
    fb.variance = variance;
    fb.B = gaussian_matrix(rng, n_rec, n_out, std::sqrt(variance));
    return fb;
  }

  static FeedbackMatrix uniform(int n_rec, int n_out) {
    FeedbackMatrix fb;
    fb.kind = FeedbackKind::kUniform;
    fb.B = Mat::Constant(n_rec, n_out, 1.0 / std::sqrt(double(n_rec)));
    return fb;
  }

  static FeedbackMatrix symmetric(const NetworkWeights& w) {
    FeedbackMatrix fb;
    fb.kind = FeedbackKind::kSymmetric;
    fb.B = w.theta_out.transpose();
    return fb;
  }

  void refresh(const NetworkWeights& w) {
    if (kind == FeedbackKind::kSymmetric) B = w.theta_out.transpose();
  }
};

// A per-run fixed sequence of feedback matrices, resampled every
// `period_steps` simulation steps. period_steps == 0 keeps one fixed matrix
// for the whole run (the default and best-performing variant).
struct FeedbackSequence {
  int period_steps = 0;
  std::vector<Mat> matrices;

  static FeedbackSequence fixed(FeedbackMatrix fb) {
    FeedbackSequence seq;
    seq.matrices.push_back(std::move(fb.B));
    return seq;
  }

  static FeedbackSequence resampled(int n_rec, int n_out, int period_steps,
                                    int horizon_steps, std::mt19937_64& rng,
                                    double variance) {
    require(period_steps > 0, "FeedbackSequence: period must be positive");
    FeedbackSequence seq;
    seq.period_steps = period_steps;
    const int count = (horizon_steps + period_steps - 1) / period_steps;
    for (int i = 0; i < count; ++i)
      seq.matrices.push_back(
          gaussian_matrix(rng, n_rec, n_out, std::sqrt(variance)));
    return seq;
  }

  const Mat& at_step(int t) const {  // t is 1-based
    if (period_steps <= 0) return matrices[0];
    const size_t idx = std::min<size_t>((t - 1) / period_steps,
                                        matrices.size() - 1);
    return matrices[idx];
  }
};

// L_j^t = sum_k B_jk (y*_k - y_k): the broadcast error signal whose product
// with the filtered eligibility trace gives the weight update direction.
inline Vec learning_signal_regression(const Vec& y, const Vec& y_star,
                                      const Mat& B) {
  require(B.cols() == y.size() && y_star.size() == y.size(),
          "learning_signal_regression: shape mismatch");
  return B * (y_star - y);
}

// Classification variant: L_j^t = sum_k B_jk (pi*_k - pi_k) with pi the
// softmax of the readouts and pi* a one-hot target.
inline Vec learning_signal_classification(const Vec& y, const Vec& pi_star,
                                          const Mat& B) {
  require(B.cols() == y.size() && pi_star.size() == y.size(),
          "learning_signal_classification: shape mismatch");
  bool one_hot = std::abs(pi_star.sum() - 1.0) < 1e-12;
  for (int k = 0; k < pi_star.size(); ++k)
    one_hot = one_hot && (pi_star[k] == 0.0 || pi_star[k] == 1.0);
  require(one_hot, "learning_signal_classification: target is not one-hot");
  return B * (pi_star - softmax(y));
}

// Accumulates dE/dtheta for the input and recurrent blocks from broadcast
// signals and kappa-filtered eligibility traces:
//   dE/dtheta_ji = sum_t (-L_j^t) * filtered_e_ji^t.
// The filter constant must match the readout leak it mirrors.
struct Eprop1Accumulator {
  double kappa = 0.0;
  Mat g_in, g_rec;

  static Eprop1Accumulator zeros(int n_in, int n_rec, double kappa) {
    Eprop1Accumulator a;
    a.kappa = kappa;
    a.g_in = Mat::Zero(n_rec, n_in);
    a.g_rec = Mat::Zero(n_rec, n_rec);
    return a;
  }

  void add_step(const Vec& signal, const EligibilityState& es) {
    require(es.kappa == kappa,
            "Eprop1Accumulator: eligibility filter kappa does not match the "
            "readout");
    const Arr neg = -signal.array();
    g_in += (es.f_in.array().colwise() * neg).matrix();
    g_rec += (es.f_rec.array().colwise() * neg).matrix();
  }

  // Variant with an explicit filtered postsynaptic product (Clopath rule).
  void add_step_filtered(const Vec& signal, const Mat& filtered_in,
                         const Mat& filtered_rec) {
    const Arr neg = -signal.array();
    g_in += (filtered_in.array().colwise() * neg).matrix();
    g_rec += (filtered_rec.array().colwise() * neg).matrix();
  }
};

// Readout-weight gradients. This path is exact (no eligibility
// approximation): dE/dtheta_out_kj = sum_t err_k^t * sum_{t'<=t}
// kappa^{t-t'} z_j^{t'}, with err the masked (y - y*) or (pi - pi*).
struct OutputGradientAccumulator {
  double kappa = 0.0;
  Mat g_out;
  Vec g_b;
  Vec filtered_z;
  double filtered_one = 0.0;

  static OutputGradientAccumulator zeros(int n_rec, int n_out, double kappa) {
    OutputGradientAccumulator a;
    a.kappa = kappa;
    a.g_out = Mat::Zero(n_out, n_rec);
    a.g_b = Vec::Zero(n_out);
    a.filtered_z = Vec::Zero(n_rec);
    return a;
  }

  void add_step(const Vec& err, const Vec& z) {
    require(err.size() == g_out.rows() && z.size() == g_out.cols(),
            "OutputGradientAccumulator: shape mismatch");
    filtered_z = kappa * filtered_z + z;
    filtered_one = kappa * filtered_one + 1.0;
    g_out.noalias() += err * filtered_z.transpose();
    g_b += filtered_one * err;
  }
};

// Firing-rate regularization E_reg = lambda * sum_j (f_j^av - f_target)^2
// with f_j^av in Hz averaged over all trials between two weight updates.
struct RegularizationSpec {
  double f_target_hz = 0.0;
  double lambda = 0.0;
  double dt_ms = 1.0;

  bool enabled() const { return lambda > 0.0; }

  void validate() const {
    require(f_target_hz >= 0.0 && lambda >= 0.0,
            "RegularizationSpec: negative parameter");
  }
};

// Raw (unfiltered) eligibility sums and spike counts collected per trial;
// the rate target couples trials in a batch, so the gradient is formed once
// the batch average rate is known.
struct RegAccumulator {
  Mat sum_e_in, sum_e_rec;
  Vec spike_count;
  long steps = 0;

  static RegAccumulator zeros(int n_in, int n_rec) {
    RegAccumulator r;
    r.sum_e_in = Mat::Zero(n_rec, n_in);
    r.sum_e_rec = Mat::Zero(n_rec, n_rec);
    r.spike_count = Vec::Zero(n_rec);
    return r;
  }

  void add_step(const EligibilityState& es, const Vec& z) {
    sum_e_in += es.e_in;
    sum_e_rec += es.e_rec;
    spike_count += z;
    ++steps;
  }

  // Variant for plasticity rules that replace the postsynaptic factor: the
  // rate pressure acts through the same product as the task updates.
  void add_step_post(const Vec& post, const EligibilityState& es,
                     const Vec& z) {
    sum_e_in.noalias() += post * es.zhat_in.transpose();
    sum_e_rec.noalias() += post * es.zhat_rec.transpose();
    spike_count += z;
    ++steps;
  }

  RegAccumulator& operator+=(const RegAccumulator& o) {
    sum_e_in += o.sum_e_in;
    sum_e_rec += o.sum_e_rec;
    spike_count += o.spike_count;
    steps += o.steps;
    return *this;
  }
};

inline Vec average_rate_hz(const RegAccumulator& acc, double dt_ms) {
  require(acc.steps > 0, "average_rate_hz: no steps recorded");
  return acc.spike_count * (1000.0 / (double(acc.steps) * dt_ms));
}

// Adds the regularization gradient
//   dE_reg/dtheta_ji = lambda * (f_j^av - f_target) / (n_steps * dt)
//                      * sum_t e_ji^t
// to the input and recurrent blocks (raw traces, no kappa filter).
inline void grad_regularization(const RegAccumulator& acc,
                                const RegularizationSpec& reg, Mat* g_in,
                                Mat* g_rec) {
  if (!reg.enabled()) return;
  reg.validate();
  const Vec f_av = average_rate_hz(acc, reg.dt_ms);
  const double dt_s = reg.dt_ms * 1e-3;
  const Arr coeff =
      reg.lambda * (f_av.array() - reg.f_target_hz) / (double(acc.steps) * dt_s);
  *g_in += (acc.sum_e_in.array().colwise() * coeff).matrix();
  *g_rec += (acc.sum_e_rec.array().colwise() * coeff).matrix();
}

// Postsynaptic factor of the voltage-based plasticity rule:
// [v - v_th_plus]^+ [vhat - v_th_minus]^+ with v_th_plus = 0 and
// v_th_minus = v_th / 4; vhat is a 10 ms low-pass of the membrane voltage.
inline Vec clopath_post_factor(const Vec& v, const Vec& vhat, double v_th) {
  return (v.array().max(0.0) * (vhat.array() - 0.25 * v_th).max(0.0)).matrix();
}

// Low-pass voltage trace used by the rule above (normalized so the trace
// stays on the scale of the voltage itself).
struct ClopathTrace {
  double decay = 0.0;
  Vec vhat;

  static ClopathTrace make(int n_rec, double tau_ms = 10.0, double dt_ms = 1.0) {
    ClopathTrace t;
    t.decay = decay_from_tau(tau_ms, dt_ms);
    t.vhat = Vec::Zero(n_rec);
    return t;
  }

  void add(const Vec& v) { vhat = decay * vhat + (1.0 - decay) * v; }
};

}  // namespace traceprop

#endif  // TRACEPROP_LEARNING_SIGNALS_HPP_
