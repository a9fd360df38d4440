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

#ifndef TRACEPROP_LOSS_HPP_
#define TRACEPROP_LOSS_HPP_

#include "traceprop/common.hpp"

namespace traceprop {

constexpr double kLog2E = 1.4426950408889634074;  // 1/ln(2)

inline Vec softmax(const Vec& y) {
  const Arr shifted = y.array() - y.maxCoeff();
  const Arr e = shifted.exp();
  return (e / e.sum()).matrix();
}

enum class LossKind {
  kMse,              // 1/2 sum_t mask_t |y - y*|^2
  kCrossEntropy,     // softmax readouts against one-hot targets
  kBinaryCeBits,     // per-channel logistic outputs, base-2 cross entropy
};

// Target series plus a per-step weighting; steps with mask 0 contribute
// nothing to the error or any gradient. Row t-1 of `targets` belongs to
// simulation step t.
struct LossSpec {
  LossKind kind = LossKind::kMse;
  Mat targets;  // [T x n_out]
  Vec mask;     // [T]

  int steps() const { return static_cast<int>(targets.rows()); }

  void validate() const {
    require(mask.size() == targets.rows(), "LossSpec: mask length != T");
    require((mask.array() >= 0.0).all(), "LossSpec: mask must be nonnegative");
    if (kind == LossKind::kCrossEntropy) {
      for (int t = 0; t < targets.rows(); ++t) {
        if (mask[t] == 0.0) continue;
        const auto row = targets.row(t);
        bool one_hot = std::abs(row.sum() - 1.0) < 1e-12;
        for (int k = 0; k < row.size(); ++k)
          one_hot = one_hot && (row[k] == 0.0 || row[k] == 1.0);
        require(one_hot, "LossSpec: cross-entropy target is not one-hot");
      }
    }
  }

  // Error contribution of step t (1-based) given the readout y^t.
  double value_at(int t, const Vec& y) const {
    const double m = mask[t - 1];
    if (m == 0.0) return 0.0;
    const Vec target = targets.row(t - 1).transpose();
    switch (kind) {
      case LossKind::kMse:
        return 0.5 * m * (y - target).squaredNorm();
      case LossKind::kCrossEntropy: {
        const Vec pi = softmax(y);
        double e = 0.0;
        for (int k = 0; k < y.size(); ++k)
          if (target[k] != 0.0) e -= target[k] * std::log(pi[k]);
        return m * e;
      }
      case LossKind::kBinaryCeBits: {
        double e = 0.0;
        for (int k = 0; k < y.size(); ++k) {
          const double p = logistic(y[k]);
          const double b = target[k];
          e -= b * std::log(std::max(p, 1e-300)) +
               (1.0 - b) * std::log(std::max(1.0 - p, 1e-300));
        }
        return m * e * kLog2E;
      }
    }
    return 0.0;
  }

  // dE/dy^t for step t (1-based).
  Vec dEdy_at(int t, const Vec& y) const {
    const double m = mask[t - 1];
    if (m == 0.0) return Vec::Zero(y.size());
    const Vec target = targets.row(t - 1).transpose();
    switch (kind) {
      case LossKind::kMse:
        return m * (y - target);
      case LossKind::kCrossEntropy:
        return m * (softmax(y) - target);
      case LossKind::kBinaryCeBits: {
        Vec g(y.size());
        for (int k = 0; k < y.size(); ++k)
          g[k] = m * (logistic(y[k]) - target[k]) * kLog2E;
        return g;
      }
    }
    return Vec::Zero(y.size());
  }

  // Total error over a simulated readout series (rows 1..T of y).
  double total(const Mat& y_rows) const {
    double e = 0.0;
    for (int t = 1; t <= steps(); ++t)
      e += value_at(t, y_rows.row(t).transpose());
    return e;
  }
};

}  // namespace traceprop

#endif  // TRACEPROP_LOSS_HPP_
