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
// Single-pass trial gradients for spiking networks: broadcast learning
// signals merged online with filtered eligibility traces, exact readout
// gradients, and optional firing-rate regularization. Also the full-horizon
// backward-pass baseline over the same trial structure.

#ifndef TRACEPROP_TRAIN_EPROP1_HPP_
#define TRACEPROP_TRAIN_EPROP1_HPP_

#include <optional>
#include <vector>

#include "traceprop/dynamics.hpp"
#include "traceprop/learning_signals.hpp"
#include "traceprop/oracle.hpp"
#include "traceprop/tasks.hpp"

namespace traceprop {

enum class SpikingAlgo {
  kEprop1,     // broadcast signals x filtered eligibility traces
  kBptt,       // exact backward pass baseline
};

struct SpikingTrainerConfig {
  CellModel model;
  int n_in = 0, n_rec = 0, n_out = 0;
  double kappa = 0.0;
  SpikingAlgo algo = SpikingAlgo::kEprop1;
  bool recurrent = true;        // false freezes theta_rec at zero
  bool clopath = false;         // voltage-based postsynaptic factor
  bool truncated_elig = false;  // drop the eligibility carry terms
  RegularizationSpec reg;

  double model_alpha() const {
    if (std::holds_alternative<AlifParams>(model))
      return std::get<AlifParams>(model).lif.alpha;
    if (std::holds_alternative<LifParams>(model))
      return std::get<LifParams>(model).alpha;
    return std::get<SigmoidParams>(model).alpha;
  }
};

struct TrialResult {
  RnnGradients grads;
  RegAccumulator reg_acc;
  double loss = 0.0;
  Mat y_rows;  // [T+1 x n_out]
};

// Runs one trial forward and merges learning signals with eligibility traces
// online; nothing is replayed backwards in time.
inline TrialResult eprop1_trial(const SpikingTrainerConfig& cfg,
                                const NetworkWeights& w,
                                const FeedbackSequence& feedback,
                                const TaskSample& sample) {
  const LossSpec loss = sample.loss();
  loss.validate();
  const int T = static_cast<int>(sample.inputs.rows());
  const bool adaptive = std::holds_alternative<AlifParams>(cfg.model);
  const bool spiking = is_spiking(cfg.model);
  require(!cfg.clopath || (spiking && !adaptive),
          "eprop1_trial: the voltage-rule variant is defined for plain LIF");

  NetworkState s = NetworkState::zeros(cfg.n_rec, cfg.n_out, adaptive);
  EligibilityState es =
      EligibilityState::zeros(cfg.n_in, cfg.n_rec, cfg.model_alpha(), cfg.kappa,
                              adaptive, cfg.truncated_elig);
  Eprop1Accumulator task_acc =
      Eprop1Accumulator::zeros(cfg.n_in, cfg.n_rec, cfg.kappa);
  OutputGradientAccumulator out_acc =
      OutputGradientAccumulator::zeros(cfg.n_rec, cfg.n_out, cfg.kappa);

  TrialResult r;
  r.reg_acc = RegAccumulator::zeros(cfg.n_in, cfg.n_rec);
  r.y_rows = Mat::Zero(T + 1, cfg.n_out);

  // The voltage-rule variant keeps its own filtered postsynaptic product.
  std::optional<ClopathTrace> vhat;
  Mat fc_in, fc_rec;
  double v_th = 0.0;
  if (cfg.clopath) {
    v_th = std::get<LifParams>(cfg.model).v_th;
    vhat = ClopathTrace::make(cfg.n_rec);
    fc_in = Mat::Zero(cfg.n_rec, cfg.n_in);
    fc_rec = Mat::Zero(cfg.n_rec, cfg.n_rec);
  }

  Vec h(cfg.n_rec);
  for (int t = 1; t <= T; ++t) {
    const Vec x_t = sample.inputs.row(t - 1).transpose();
    const Vec z_prev = s.z;
    if (adaptive) {
      s = alif_step(s, x_t, std::get<AlifParams>(cfg.model), w, &h);
    } else if (spiking) {
      s = lif_step(s, x_t, std::get<LifParams>(cfg.model), w, &h);
    } else {
      s = sigmoid_rnn_step(s, x_t, std::get<SigmoidParams>(cfg.model), w, &h);
    }
    s.y = readout_step(s.y, s.z, w, cfg.kappa);
    r.y_rows.row(t) = s.y.transpose();
    check_finite(s.y, "readout", t);

    if (adaptive) {
      elig_update_alif(es, x_t, z_prev, h, std::get<AlifParams>(cfg.model));
    } else {
      elig_update_lif(es, x_t, z_prev, h);
    }

    const Vec err = loss.dEdy_at(t, s.y);  // masked (y - y*) or (pi - pi*)
    out_acc.add_step(err, s.z);
    r.loss += loss.value_at(t, s.y);

    const Mat& B = feedback.at_step(t);
    if (cfg.clopath) {
      // The voltage rule replaces the postsynaptic factor of the whole
      // plasticity rule, so the rate pressure uses the same product.
      vhat->add(s.v);
      Vec post = clopath_post_factor(s.v, vhat->vhat, v_th);
      for (int j = 0; j < post.size(); ++j)  // refractory clamp, as for h
        if (s.z[j] == 0.0 && s.refrac[j] > 0) post[j] = 0.0;
      r.reg_acc.add_step_post(post, es, s.z);
      fc_in = cfg.kappa * fc_in + post * es.zhat_in.transpose();
      fc_rec = cfg.kappa * fc_rec + post * es.zhat_rec.transpose();
      if (err.cwiseAbs().maxCoeff() != 0.0)
        task_acc.add_step_filtered(B * (-err), fc_in, fc_rec);
    } else {
      r.reg_acc.add_step(es, s.z);
      elig_filter(es);
      if (err.cwiseAbs().maxCoeff() != 0.0) task_acc.add_step(B * (-err), es);
    }
  }

  r.grads = RnnGradients::zeros(w);
  r.grads.d_in = task_acc.g_in;
  r.grads.d_rec = task_acc.g_rec;
  r.grads.d_out = out_acc.g_out;
  r.grads.d_b = out_acc.g_b;
  r.grads.d_rec.diagonal().setZero();
  if (!cfg.recurrent) r.grads.d_rec.setZero();
  return r;
}

// Exact backward-pass baseline over the same trial. The regularization
// accumulator is filled from a forward eligibility sweep so the rate
// pressure uses the same trace form in both algorithms.
inline TrialResult bptt_trial(const SpikingTrainerConfig& cfg,
                              const NetworkWeights& w,
                              const TaskSample& sample) {
  const LossSpec loss = sample.loss();
  const Trajectory traj = simulate_trial(cfg.model, w, sample.inputs, cfg.kappa);
  const BpttResult back = bptt_gradients(traj, loss, cfg.model, w, cfg.kappa);

  TrialResult r;
  r.grads = back.grads;
  r.y_rows = traj.y;
  r.loss = loss.total(traj.y);
  r.reg_acc = RegAccumulator::zeros(cfg.n_in, cfg.n_rec);
  const bool adaptive = std::holds_alternative<AlifParams>(cfg.model);
  EligibilityState es = EligibilityState::zeros(
      cfg.n_in, cfg.n_rec, cfg.model_alpha(), cfg.kappa, adaptive);
  for (int t = 1; t <= traj.steps(); ++t) {
    const Vec x_t = traj.inputs.row(t - 1).transpose();
    const Vec z_prev = traj.z.row(t - 1).transpose();
    const Vec h_t = traj.h.row(t).transpose();
    if (adaptive) {
      elig_update_alif(es, x_t, z_prev, h_t, std::get<AlifParams>(cfg.model));
    } else {
      elig_update_lif(es, x_t, z_prev, h_t);
    }
    r.reg_acc.add_step(es, traj.z.row(t).transpose());
  }
  if (!cfg.recurrent) r.grads.d_rec.setZero();
  return r;
}

struct BatchResult {
  RnnGradients grads;
  double mean_loss = 0.0;
  Vec rate_hz;         // per-neuron batch firing rate
  Mat last_y;          // readout rows of the last trial (for metrics)
};

// Evaluates a batch of trials (in parallel when n_threads > 1), reduces
// gradients in trial order, and applies the batch-level rate regularization.
inline BatchResult run_spiking_batch(const SpikingTrainerConfig& cfg,
                                     const NetworkWeights& w,
                                     const FeedbackSequence& feedback,
                                     const std::vector<TaskSample>& samples,
                                     int n_threads) {
  const int B = static_cast<int>(samples.size());
  require(B > 0, "run_spiking_batch: empty batch");
  std::vector<TrialResult> results(B);
  parallel_for(B, n_threads, [&](int i) {
    results[i] = cfg.algo == SpikingAlgo::kEprop1
                     ? eprop1_trial(cfg, w, feedback, samples[i])
                     : bptt_trial(cfg, w, samples[i]);
  });

  BatchResult out;
  out.grads = RnnGradients::zeros(w);
  RegAccumulator reg_total = RegAccumulator::zeros(cfg.n_in, cfg.n_rec);
  for (int i = 0; i < B; ++i) {
    out.grads += results[i].grads;
    reg_total += results[i].reg_acc;
    out.mean_loss += results[i].loss / B;
  }
  out.rate_hz = average_rate_hz(reg_total, cfg.reg.dt_ms);
  if (cfg.reg.enabled()) {
    grad_regularization(reg_total, cfg.reg, &out.grads.d_in, &out.grads.d_rec);
    out.grads.d_rec.diagonal().setZero();
    if (!cfg.recurrent) out.grads.d_rec.setZero();
  }
  out.last_y = std::move(results.back().y_rows);
  return out;
}

}  // namespace traceprop

#endif  // TRACEPROP_TRAIN_EPROP1_HPP_
