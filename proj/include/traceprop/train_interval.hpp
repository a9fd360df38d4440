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
// Streaming curriculum trainer for the copy-repeat task: LSTM networks
// trained in delta_t-step intervals with per-interval weight updates. The
// synthetic-gradient module is trained jointly from bootstrapped targets
// computed on a lookahead interval, which costs one extra forward/backward
// pair per interval.

#ifndef TRACEPROP_TRAIN_INTERVAL_HPP_
#define TRACEPROP_TRAIN_INTERVAL_HPP_

#include <functional>
#include <vector>

#include "traceprop/eprop3.hpp"
#include "traceprop/tasks.hpp"

namespace traceprop {

struct CopyRepeatRecord {
  long update = 0;
  double bits = 0.0;
  int level = 0;
  int n_pattern = 0;
  int n_repetitions = 0;
  double sg_loss = 0.0;
};

struct CopyRepeatConfig {
  int n_units = 64;
  int batch = 64;
  TruncationConfig trunc;
  int sg_hidden = 512;
  double lr = 1e-4;
  double sg_lr = 1e-4;
  long max_updates = 500;
  double solve_bits = 0.15;
  std::uint64_t seed = 1;
  double init_scale = 1.0;
  int n_threads = 1;
  // Called after every sequence batch (for streaming metrics output).
  std::function<void(const CopyRepeatRecord&)> on_record;
};

struct CopyRepeatResult {
  CurriculumState cur;
  long updates = 0;
  std::vector<CopyRepeatRecord> history;
  LstmWeights w;
};

namespace detail {

inline LstmState state_from_row(const LstmTrajectory& seg, int row) {
  LstmState s;
  s.c = seg.c.row(row).transpose();
  s.h = seg.h.row(row).transpose();
  for (int g = 0; g < 4; ++g) s.gates[g] = seg.gates[g].row(row).transpose();
  s.y = seg.y.row(row).transpose();
  return s;
}

// Instantaneous learning signals (no backward pass, no future terms):
// L_j^t = sum_k theta_out_kj dE/dy_k^t. Valid for kappa = 0 readouts.
inline LstmGradients lstm_eprop1_interval(const LstmTrajectory& seg,
                                          const LossSpec& seg_loss,
                                          const LstmWeights& w,
                                          LstmEligibility& es) {
  LstmGradients g = LstmGradients::zeros(w);
  Mat signals = Mat::Zero(seg.steps() + 1, w.n_units());
  for (int t = 1; t <= seg.steps(); ++t) {
    const Vec dEdy = seg_loss.dEdy_at(t, seg.y.row(t).transpose());
    signals.row(t) = (w.theta_out.transpose() * dEdy).transpose();
    g.d_out.noalias() += dEdy * seg.h.row(t);
    g.d_b += dEdy;
  }
  lstm_eprop_interval_gradient(seg, signals, es, &g);
  return g;
}

}  // namespace detail

// Per-sequence trial context: carried network state and eligibility traces.
// Both reset at sequence boundaries; the traces persist across the
// truncation intervals inside a sequence.
struct LstmTrialContext {
  LstmState state;
  LstmEligibility es;
  double seq_bits = 0.0;
};

inline CopyRepeatResult train_copy_repeat(const CopyRepeatConfig& cfg) {
  cfg.trunc.validate();
  const IntervalScheme mode = cfg.trunc.mode;
  auto rng = make_rng(cfg.seed);
  LstmWeights w = init_lstm_weights(9, cfg.n_units, 9, rng, cfg.init_scale);
  AdamState opt = AdamState::init(adam_block_sizes(w));

  SyntheticGradientNet sg =
      SyntheticGradientNet::init(cfg.n_units, cfg.n_units, cfg.sg_hidden, rng);
  AdamState sg_opt = AdamState::init(adam_block_sizes(sg));
  const bool use_sg = scheme_uses_sg(mode);
  const bool use_traces = scheme_uses_traces(mode);

  CopyRepeatResult result;
  std::vector<LstmTrialContext> ctx(cfg.batch);
  std::vector<LstmGradients> trial_grads(cfg.batch);
  std::vector<SgGradients> trial_sg_grads(cfg.batch);
  std::vector<double> trial_sg_loss(cfg.batch, 0.0);

  long batch_idx = 0;
  while (result.updates < cfg.max_updates) {
    std::vector<TaskSample> samples(cfg.batch);
    for (int b = 0; b < cfg.batch; ++b)
      samples[b] = gen_copy_repeat(
          result.cur, split_seed(cfg.seed, 0x100000 + batch_idx * cfg.batch + b));
    const int T = static_cast<int>(samples[0].inputs.rows());

    for (int b = 0; b < cfg.batch; ++b) {
      ctx[b].state = LstmState::zeros(cfg.n_units, 9);
      ctx[b].es = LstmEligibility::zeros(9, cfg.n_units, /*kappa=*/0.0);
      ctx[b].seq_bits = 0.0;
    }

    double batch_sg_loss = 0.0;
    for (int t0 = 1; t0 <= T; t0 += cfg.trunc.delta_t) {
      const int t1 = std::min(t0 + cfg.trunc.delta_t - 1, T);
      const int len = t1 - t0 + 1;
      const bool last = (t1 == T);
      const int la_len = last ? 0 : std::min(cfg.trunc.delta_t, T - t1);

      parallel_for(cfg.batch, cfg.n_threads, [&](int b) {
        const TaskSample& sample = samples[b];
        const LossSpec seg_loss = slice_loss(sample.loss(), t0, t1);
        const LstmTrajectory seg =
            simulate_trial(w, sample.inputs.middleRows(t0 - 1, len), 0.0, true,
                           &ctx[b].state);
        ctx[b].seq_bits += seg_loss.total(seg.y);
        const LstmState end_state = detail::state_from_row(seg, len);

        LstmCarry boundary = LstmCarry::zeros(cfg.n_units, 9);
        LstmTrajectory lookahead;
        if (use_sg && !last) {
          lookahead = simulate_trial(
              w, sample.inputs.middleRows(t1, la_len), 0.0, true, &end_state);
          const LstmBoundaryLink link = lstm_link_from_segment(lookahead);
          boundary = carry_from_sg(sg.forward(end_state.h), cfg.trunc.eta_sg, w,
                                   &link, Arr());
        }

        if (mode == IntervalScheme::kEprop1) {
          trial_grads[b] = detail::lstm_eprop1_interval(seg, seg_loss, w,
                                                        ctx[b].es);
        } else {
          trial_grads[b] = lstm_interval_gradient(
              seg, seg_loss, w, 0.0, boundary, mode,
              use_traces ? &ctx[b].es : nullptr);
        }

        trial_sg_loss[b] = 0.0;
        if (use_sg && !last) {
          // Bootstrapped target: the boundary-inclusive gradient at the first
          // state of the lookahead interval.
          const bool la_last = (t1 + la_len == T);
          LstmCarry la_carry = LstmCarry::zeros(cfg.n_units, 9);
          if (!la_last) {
            const Arr gf_tail =
                lookahead.gates[kGateForget].row(la_len).transpose().array();
            la_carry = carry_from_sg(
                sg.forward(lookahead.h.row(la_len).transpose()),
                cfg.trunc.eta_sg, w, nullptr, gf_tail);
          }
          const LstmBpttResult la_back = lstm_backward_interval(
              lookahead, slice_loss(sample.loss(), t1 + 1, t1 + la_len), w,
              0.0, la_carry);
          trial_sg_grads[b] = sg.zero_grads();
          trial_sg_loss[b] =
              sg.grad(end_state.h, la_back.exit.dEdc, &trial_sg_grads[b]);
        }
        ctx[b].state = end_state;
      });

      LstmGradients total = LstmGradients::zeros(w);
      for (int b = 0; b < cfg.batch; ++b) total += trial_grads[b];
      adam_update(w, total, opt, cfg.lr);
      if (use_sg && !last) {
        SgGradients sg_total = sg.zero_grads();
        for (int b = 0; b < cfg.batch; ++b) {
          sg_total += trial_sg_grads[b];
          batch_sg_loss += trial_sg_loss[b];
        }
        adam_update(sg, sg_total, sg_opt, cfg.sg_lr);
      }
      ++result.updates;
      if (result.updates >= cfg.max_updates) break;
    }

    double mean_bits = 0.0;
    for (int b = 0; b < cfg.batch; ++b) mean_bits += ctx[b].seq_bits;
    mean_bits /= cfg.batch;

    CopyRepeatRecord rec;
    rec.update = result.updates;
    rec.bits = mean_bits;
    rec.level = result.cur.level();
    rec.n_pattern = result.cur.n_pattern;
    rec.n_repetitions = result.cur.n_repetitions;
    rec.sg_loss = batch_sg_loss / cfg.batch;
    result.history.push_back(rec);
    if (cfg.on_record) cfg.on_record(rec);

    if (mean_bits < cfg.solve_bits && result.cur.n_repetitions < 9)
      result.cur.advance();
    ++batch_idx;
  }
  result.w = w;
  return result;
}

}  // namespace traceprop

#endif  // TRACEPROP_TRAIN_INTERVAL_HPP_
