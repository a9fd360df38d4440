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

#include "traceprop/optimizer.hpp"

#include <gtest/gtest.h>

namespace traceprop {
namespace {

TEST(Accumulate, EmptyBatchIsZero) {
  NetworkWeights w = NetworkWeights::zeros(2, 3, 1);
  const RnnGradients zero = RnnGradients::zeros(w);
  const RnnGradients total = accumulate(std::vector<RnnGradients>{}, zero);
  EXPECT_EQ(total.abs_max(), 0.0);
}

TEST(Accumulate, SingleElementIsIdentityAndSumMatchesSerialReplay) {
  auto rng = make_rng(61);
  NetworkWeights w = NetworkWeights::zeros(2, 3, 1);
  std::vector<RnnGradients> batch;
  for (int i = 0; i < 5; ++i) {
    RnnGradients g = RnnGradients::zeros(w);
    g.d_in = gaussian_matrix(rng, 3, 2, 1.0);
    g.d_rec = gaussian_matrix(rng, 3, 3, 1.0);
    g.d_out = gaussian_matrix(rng, 1, 3, 1.0);
    g.d_b = gaussian_matrix(rng, 1, 1, 1.0).col(0);
    batch.push_back(g);
  }
  const RnnGradients one = accumulate(std::vector<RnnGradients>{batch[0]},
                                      RnnGradients::zeros(w));
  EXPECT_EQ((one.d_in - batch[0].d_in).cwiseAbs().maxCoeff(), 0.0);

  RnnGradients serial = RnnGradients::zeros(w);
  for (const auto& g : batch) serial += g;
  const RnnGradients total = accumulate(batch, RnnGradients::zeros(w));
  EXPECT_EQ((total.d_in - serial.d_in).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((total.d_rec - serial.d_rec).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Adam, ZeroGradientLeavesWeightsUnchanged) {
  auto rng = make_rng(62);
  NetworkWeights w = init_weights(2, 3, 1, rng);
  const NetworkWeights before = w;
  AdamState st = AdamState::init(adam_block_sizes(w));
  const RnnGradients zero = RnnGradients::zeros(w);
  for (int i = 0; i < 50; ++i) adam_update(w, zero, st, 0.1);
  EXPECT_EQ((w.theta_in - before.theta_in).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((w.theta_rec - before.theta_rec).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Adam, ConstantGradientStepApproachesRateTimesSign) {
  NetworkWeights w = NetworkWeights::zeros(1, 2, 1);
  AdamState st = AdamState::init(adam_block_sizes(w));
  RnnGradients g = RnnGradients::zeros(w);
  g.d_in.setConstant(3.0);
  const double rate = 0.01;
  double prev = 0.0;
  for (int i = 0; i < 5000; ++i) {
    prev = w.theta_in(0, 0);
    adam_update(w, g, st, rate);
  }
  EXPECT_NEAR(prev - w.theta_in(0, 0), rate, 1e-6);
}

TEST(Adam, MatchesIndependentScalarReference) {
  // Hand-rolled scalar Adam, written directly from the update equations.
  auto rng = make_rng(63);
  const double rate = 0.05, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double w_ref = 0.7, m = 0.0, v = 0.0;

  NetworkWeights w = NetworkWeights::zeros(1, 2, 1);
  w.theta_in(0, 0) = 0.7;
  AdamState st = AdamState::init(adam_block_sizes(w), b1, b2, eps);

  std::normal_distribution<double> dist(0.0, 1.0);
  for (int t = 1; t <= 10; ++t) {
    const double grad = dist(rng);
    RnnGradients g = RnnGradients::zeros(w);
    g.d_in(0, 0) = grad;
    adam_update(w, g, st, rate);

    m = b1 * m + (1 - b1) * grad;
    v = b2 * v + (1 - b2) * grad * grad;
    const double mhat = m / (1 - std::pow(b1, t));
    const double vhat = v / (1 - std::pow(b2, t));
    w_ref -= rate * mhat / (std::sqrt(vhat) + eps);
    ASSERT_NEAR(w.theta_in(0, 0), w_ref, 1e-14) << "step " << t;
  }
}

TEST(Adam, RecurrentDiagonalStaysZero) {
  auto rng = make_rng(64);
  NetworkWeights w = init_weights(3, 4, 2, rng);
  AdamState st = AdamState::init(adam_block_sizes(w));
  for (int i = 0; i < 20; ++i) {
    RnnGradients g = RnnGradients::zeros(w);
    g.d_rec = gaussian_matrix(rng, 4, 4, 1.0);  // including diagonal noise
    adam_update(w, g, st, 0.01);
  }
  EXPECT_EQ(w.theta_rec.diagonal().cwiseAbs().maxCoeff(), 0.0);
}

TEST(InitWeights, FanInScalingAndDeterminism) {
  auto rng1 = make_rng(65);
  const NetworkWeights a = init_weights(100, 50, 3, rng1);
  auto rng2 = make_rng(65);
  const NetworkWeights b = init_weights(100, 50, 3, rng2);
  EXPECT_EQ((a.theta_in - b.theta_in).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(a.theta_rec.diagonal().cwiseAbs().maxCoeff(), 0.0);

  // Empirical std of the input block: 1/sqrt(100) = 0.1.
  const double std_est = std::sqrt(a.theta_in.array().square().mean());
  EXPECT_NEAR(std_est, 0.1, 0.01);
}

TEST(InitWeights, SpectralRadiusStaysModerateAtScale) {
  auto rng = make_rng(66);
  const NetworkWeights w = init_weights(20, 600, 3, rng);
  const Eigen::VectorXcd ev = w.theta_rec.eigenvalues();
  double radius = 0.0;
  for (int i = 0; i < ev.size(); ++i) radius = std::max(radius, std::abs(ev[i]));
  EXPECT_LT(radius, 3.0);
}

TEST(Schedule, StepDecay) {
  Schedule s;
  s.initial = 0.003;
  s.factor = 0.7;
  s.period = 100;
  EXPECT_DOUBLE_EQ(s.rate_at(0), 0.003);
  EXPECT_DOUBLE_EQ(s.rate_at(99), 0.003);
  EXPECT_DOUBLE_EQ(s.rate_at(100), 0.003 * 0.7);
  EXPECT_DOUBLE_EQ(s.rate_at(250), 0.003 * 0.7 * 0.7);
  Schedule flat;
  flat.initial = 0.01;
  EXPECT_DOUBLE_EQ(flat.rate_at(1000), 0.01);
}

}  // namespace
}  // namespace traceprop
