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

#include "traceprop/learning_signals.hpp"

#include <gtest/gtest.h>

#include "traceprop/optimizer.hpp"
#include "traceprop/oracle.hpp"
#include "traceprop/train_eprop1.hpp"

namespace traceprop {
namespace {

TEST(LearningSignal, ZeroAtPerfectOutput) {
  auto rng = make_rng(41);
  const FeedbackMatrix fb = FeedbackMatrix::random(5, 3, rng, 1.0 / 5);
  const Vec y = gaussian_matrix(rng, 3, 1, 1.0).col(0);
  EXPECT_EQ(learning_signal_regression(y, y, fb.B).cwiseAbs().maxCoeff(), 0.0);
}

TEST(LearningSignal, SymmetricFeedbackEqualsReadoutTranspose) {
  auto rng = make_rng(42);
  NetworkWeights w = init_weights(2, 4, 2, rng);
  FeedbackMatrix fb = FeedbackMatrix::symmetric(w);
  const Vec y = gaussian_matrix(rng, 2, 1, 1.0).col(0);
  const Vec y_star = gaussian_matrix(rng, 2, 1, 1.0).col(0);
  const Vec sig = learning_signal_regression(y, y_star, fb.B);
  const Vec expected = w.theta_out.transpose() * (y_star - y);
  EXPECT_EQ((sig - expected).cwiseAbs().maxCoeff(), 0.0);
  // Refresh tracks readout updates.
  w.theta_out(0, 0) += 1.0;
  fb.refresh(w);
  EXPECT_EQ(fb.B(0, 0), w.theta_out(0, 0));
}

TEST(LearningSignal, UniformFeedbackIsGlobalSignal) {
  const FeedbackMatrix fb = FeedbackMatrix::uniform(16, 2);
  EXPECT_DOUBLE_EQ(fb.B(3, 1), 0.25);  // 1/sqrt(16)
  EXPECT_EQ((fb.B.array() - 0.25).abs().maxCoeff(), 0.0);
}

TEST(LearningSignal, ClassificationSoftmaxSymmetry) {
  const Mat B = Mat::Identity(2, 2);
  Vec y = Vec::Zero(2);
  Vec target(2);
  target << 1.0, 0.0;
  const Vec sig = learning_signal_classification(y, target, B);
  EXPECT_NEAR(sig[0], 0.5, 1e-15);
  EXPECT_NEAR(sig[1], -0.5, 1e-15);
  Vec bad(2);
  bad << 0.5, 0.5;
  EXPECT_THROW(learning_signal_classification(y, bad, B), ConfigError);
}

TEST(LearningSignal, LinearInOutputError) {
  auto rng = make_rng(43);
  const FeedbackMatrix fb = FeedbackMatrix::random(6, 3, rng, 0.2);
  const Vec y = gaussian_matrix(rng, 3, 1, 1.0).col(0);
  const Vec y_star = gaussian_matrix(rng, 3, 1, 1.0).col(0);
  const Vec base = learning_signal_regression(y, y_star, fb.B);
  const double c = 3.7;
  const Vec scaled =
      learning_signal_regression(y, (y + c * (y_star - y)).eval(), fb.B);
  EXPECT_LT((scaled - c * base).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LearningSignal, RandomFeedbackFixedWithinRun) {
  auto rng = make_rng(44);
  const FeedbackMatrix fb = FeedbackMatrix::random(4, 2, rng, 0.25);
  const Mat snapshot = fb.B;
  const FeedbackSequence seq = FeedbackSequence::fixed(fb);
  for (int t = 1; t <= 1000; t += 97)
    EXPECT_EQ((seq.at_step(t) - snapshot).cwiseAbs().maxCoeff(), 0.0);
}

TEST(LearningSignal, ResampledSequenceIsPeriodicAndFixed) {
  auto rng = make_rng(45);
  const FeedbackSequence seq = FeedbackSequence::resampled(3, 2, 20, 100, rng,
                                                           1.0 / 3);
  EXPECT_EQ(seq.matrices.size(), 5u);
  EXPECT_EQ((seq.at_step(1) - seq.at_step(20)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT((seq.at_step(20) - seq.at_step(21)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GradEprop1, ZeroSignalGivesZeroGradient) {
  EligibilityState es = EligibilityState::zeros(2, 3, 0.9, 0.5, false);
  Eprop1Accumulator acc = Eprop1Accumulator::zeros(2, 3, 0.5);
  auto rng = make_rng(46);
  for (int t = 0; t < 10; ++t) {
    elig_update_lif(es, bernoulli_matrix(rng, 2, 1, 0.5).col(0),
                    bernoulli_matrix(rng, 3, 1, 0.5).col(0),
                    Vec::Constant(3, 0.3));
    elig_filter(es);
    acc.add_step(Vec::Zero(3), es);
  }
  EXPECT_EQ(acc.g_in.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(acc.g_rec.cwiseAbs().maxCoeff(), 0.0);
}

TEST(GradEprop1, SingleStepReducesToThreeFactorProduct) {
  // T = 1, kappa = 0: gradient = -signal_j * h_j * z_i.
  EligibilityState es = EligibilityState::zeros(1, 2, 0.9, 0.0, false);
  Eprop1Accumulator acc = Eprop1Accumulator::zeros(1, 2, 0.0);
  Vec z_prev(2);
  z_prev << 1.0, 0.0;
  Vec x(1);
  x << 1.0;
  const Vec h = Vec::Constant(2, 0.3);
  elig_update_lif(es, x, z_prev, h);
  elig_filter(es);
  Vec sig(2);
  sig << 2.0, -1.0;
  acc.add_step(sig, es);
  EXPECT_DOUBLE_EQ(acc.g_rec(0, 0), -2.0 * 0.3 * 1.0);
  EXPECT_DOUBLE_EQ(acc.g_rec(1, 0), 1.0 * 0.3 * 1.0);
  EXPECT_DOUBLE_EQ(acc.g_rec(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(acc.g_in(0, 0), -2.0 * 0.3);
}

TEST(GradEprop1, KappaMismatchIsConfigurationError) {
  EligibilityState es = EligibilityState::zeros(1, 2, 0.9, 0.5, false);
  Eprop1Accumulator acc = Eprop1Accumulator::zeros(1, 2, 0.3);
  EXPECT_THROW(acc.add_step(Vec::Zero(2), es), ConfigError);
}

// With symmetric feedback the only term the online rule drops is the
// dependence of future errors on the current spike through the recurrent
// dynamics. A network with zero recurrent weights and no refractory
// coupling has no such dependence, so the rule must reproduce the oracle.
TEST(GradEprop1, MatchesOracleWhenNoFutureDependence) {
  auto rng = make_rng(47);
  const int n_in = 3, n = 4, n_out = 2, T = 30;
  NetworkWeights w = init_weights(n_in, n, n_out, rng, 2.0);
  w.theta_rec.setZero();
  const LifParams lif = LifParams::from_tau(20.0, 0.4, 0.3, 0);
  const CellModel model(lif);
  const double kappa = std::exp(-1.0 / 20.0);
  const Mat inputs = bernoulli_matrix(rng, T, n_in, 0.3);

  TaskSample sample;
  sample.inputs = inputs;
  sample.targets = gaussian_matrix(rng, T, n_out, 1.0);
  sample.mask = Vec::Ones(T);
  sample.loss_kind = LossKind::kMse;

  SpikingTrainerConfig cfg;
  cfg.model = model;
  cfg.n_in = n_in;
  cfg.n_rec = n;
  cfg.n_out = n_out;
  cfg.kappa = kappa;
  cfg.recurrent = false;

  const FeedbackSequence fb =
      FeedbackSequence::fixed(FeedbackMatrix::symmetric(w));
  const TrialResult r = eprop1_trial(cfg, w, fb, sample);

  const Trajectory traj = simulate_trial(model, w, inputs, kappa);
  const BpttResult back =
      bptt_gradients(traj, sample.loss(), model, w, kappa);

  // The voltage still couples steps through alpha and the reset, but spikes
  // influence future errors only via theta_rec (zero here) and the reset
  // path. The reset path contributes through h * v_th * future-signals; on
  // this instance it is the only gap, so agreement should be near-exact for
  // the input block when no neuron is near threshold repeatedly. Use a
  // loose-but-meaningful bound and an exact check for the readout block.
  EXPECT_LT(max_relative_error(r.grads.d_out, back.grads.d_out), 1e-10);
  EXPECT_LT(max_relative_error(Mat(r.grads.d_b), Mat(back.grads.d_b)), 1e-10);
  const double scale = back.grads.d_in.cwiseAbs().maxCoeff();
  EXPECT_LT((r.grads.d_in - back.grads.d_in).cwiseAbs().maxCoeff() / scale,
            0.2);
}

TEST(GradOutputWeights, ExactAgainstOracle) {
  auto rng = make_rng(48);
  OracleInstance inst = random_rnn_instance(rng, "lif", 6, 40);
  const Trajectory traj =
      simulate_trial(inst.model, inst.w, inst.inputs, inst.kappa);
  const BpttResult back =
      bptt_gradients(traj, inst.loss, inst.model, inst.w, inst.kappa);

  OutputGradientAccumulator acc = OutputGradientAccumulator::zeros(
      inst.w.n_rec(), inst.w.n_out(), inst.kappa);
  const LossSpec loss = inst.loss;
  for (int t = 1; t <= traj.steps(); ++t)
    acc.add_step(loss.dEdy_at(t, traj.y.row(t).transpose()),
                 traj.z.row(t).transpose());
  EXPECT_LT(max_relative_error(acc.g_out, back.grads.d_out), 1e-10);
  EXPECT_LT(max_relative_error(Mat(acc.g_b), Mat(back.grads.d_b)), 1e-10);
}

TEST(GradOutputWeights, MaskedStepsContributeNothing) {
  auto rng = make_rng(49);
  OracleInstance inst = random_rnn_instance(rng, "lif", 5, 30);
  inst.loss.mask.setZero();
  const Trajectory traj =
      simulate_trial(inst.model, inst.w, inst.inputs, inst.kappa);
  OutputGradientAccumulator acc = OutputGradientAccumulator::zeros(
      inst.w.n_rec(), inst.w.n_out(), inst.kappa);
  for (int t = 1; t <= traj.steps(); ++t)
    acc.add_step(inst.loss.dEdy_at(t, traj.y.row(t).transpose()),
                 traj.z.row(t).transpose());
  EXPECT_EQ(acc.g_out.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Regularization, ZeroIncrementAtTargetRate) {
  RegularizationSpec reg;
  reg.f_target_hz = 10.0;
  reg.lambda = 0.5;
  RegAccumulator acc = RegAccumulator::zeros(1, 2);
  // 10 Hz at 1 ms steps: one spike per 100 steps.
  for (int t = 0; t < 1000; ++t) {
    EligibilityState es = EligibilityState::zeros(1, 2, 0.9, 0.0, false);
    es.e_rec.setConstant(0.1);
    acc.add_step(es, t % 100 == 0 ? Vec::Ones(2) : Vec::Zero(2));
  }
  EXPECT_NEAR(average_rate_hz(acc, 1.0)[0], 10.0, 1e-12);
  Mat g_in = Mat::Zero(2, 1), g_rec = Mat::Zero(2, 2);
  grad_regularization(acc, reg, &g_in, &g_rec);
  EXPECT_NEAR(g_rec.cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(Regularization, SilentNeuronGetsPositiveRatePressure) {
  RegularizationSpec reg;
  reg.f_target_hz = 10.0;
  reg.lambda = 0.5;
  RegAccumulator acc = RegAccumulator::zeros(1, 1);
  EligibilityState es = EligibilityState::zeros(1, 1, 0.9, 0.0, false);
  es.e_rec.setConstant(0.2);  // nonzero trace, no spikes
  es.e_in.setConstant(0.2);
  for (int t = 0; t < 500; ++t) acc.add_step(es, Vec::Zero(1));
  Mat g_in = Mat::Zero(1, 1), g_rec = Mat::Zero(1, 1);
  grad_regularization(acc, reg, &g_in, &g_rec);
  // Descent direction -g raises the weight: gradient must be negative.
  EXPECT_LT(g_rec(0, 0), 0.0);
}

TEST(Clopath, RectifiersGateThePostsynapticFactor) {
  const double v_th = 0.6;
  Vec v(3), vhat(3);
  v << -0.1, 0.4, 0.5;
  vhat << 0.5, 0.1, 0.4;
  const Vec f = clopath_post_factor(v, vhat, v_th);
  EXPECT_EQ(f[0], 0.0);               // v < 0
  EXPECT_EQ(f[1], 0.0);               // vhat < v_th/4
  EXPECT_NEAR(f[2], 0.5 * 0.25, 1e-15);
}

TEST(Clopath, TraceFollowsVoltageScale) {
  ClopathTrace tr = ClopathTrace::make(1);
  for (int t = 0; t < 200; ++t) tr.add(Vec::Constant(1, 0.8));
  EXPECT_NEAR(tr.vhat[0], 0.8, 1e-8);
}

TEST(MaskedSteps, ContributeZeroToEveryBlock) {
  auto rng = make_rng(52);
  const int n_in = 2, n = 3, n_out = 1, T = 20;
  NetworkWeights w = init_weights(n_in, n, n_out, rng, 2.0);
  TaskSample sample;
  sample.inputs = bernoulli_matrix(rng, T, n_in, 0.4);
  sample.targets = gaussian_matrix(rng, T, n_out, 1.0);
  sample.mask = Vec::Zero(T);
  sample.loss_kind = LossKind::kMse;

  SpikingTrainerConfig cfg;
  cfg.model = CellModel(LifParams::from_tau(20.0, 0.4));
  cfg.n_in = n_in;
  cfg.n_rec = n;
  cfg.n_out = n_out;
  cfg.kappa = 0.5;
  auto rng2 = make_rng(53);
  const FeedbackSequence fb = FeedbackSequence::fixed(
      FeedbackMatrix::random(n, n_out, rng2, 1.0 / n));
  const TrialResult r = eprop1_trial(cfg, w, fb, sample);
  EXPECT_EQ(r.grads.abs_max(), 0.0);
  EXPECT_EQ(r.loss, 0.0);
}

}  // namespace
}  // namespace traceprop
