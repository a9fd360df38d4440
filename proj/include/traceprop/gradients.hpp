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

#ifndef TRACEPROP_GRADIENTS_HPP_
#define TRACEPROP_GRADIENTS_HPP_

#include <array>

#include "traceprop/cells.hpp"
#include "traceprop/common.hpp"

namespace traceprop {

// Accumulated dE/dtheta for the input, recurrent, and output weight blocks.
// All producers in this library return gradients of the error (the optimizer
// subtracts them scaled by the learning rate).
struct RnnGradients {
  Mat d_in, d_rec, d_out;
  Vec d_b;

  static RnnGradients zeros(const NetworkWeights& w) {
    RnnGradients g;
    g.d_in = Mat::Zero(w.theta_in.rows(), w.theta_in.cols());
    g.d_rec = Mat::Zero(w.theta_rec.rows(), w.theta_rec.cols());
    g.d_out = Mat::Zero(w.theta_out.rows(), w.theta_out.cols());
    g.d_b = Vec::Zero(w.b_out.size());
    return g;
  }

  void setZero() {
    d_in.setZero();
    d_rec.setZero();
    d_out.setZero();
    d_b.setZero();
  }

  RnnGradients& operator+=(const RnnGradients& o) {
    require(d_in.rows() == o.d_in.rows() && d_in.cols() == o.d_in.cols() &&
                d_rec.rows() == o.d_rec.rows() && d_out.rows() == o.d_out.rows(),
            "RnnGradients: shape mismatch in accumulate");
    d_in += o.d_in;
    d_rec += o.d_rec;
    d_out += o.d_out;
    d_b += o.d_b;
    return *this;
  }

  double abs_max() const {
    return std::max({d_in.cwiseAbs().maxCoeff(), d_rec.cwiseAbs().maxCoeff(),
                     d_out.cwiseAbs().maxCoeff(), d_b.cwiseAbs().maxCoeff()});
  }
};

struct LstmGradients {
  std::array<Mat, 4> d_in, d_rec;
  Mat d_out;
  Vec d_b;

  static LstmGradients zeros(const LstmWeights& w) {
    LstmGradients g;
    for (int b = 0; b < 4; ++b) {
      g.d_in[b] = Mat::Zero(w.w_in[b].rows(), w.w_in[b].cols());
      g.d_rec[b] = Mat::Zero(w.w_rec[b].rows(), w.w_rec[b].cols());
    }
    g.d_out = Mat::Zero(w.theta_out.rows(), w.theta_out.cols());
    g.d_b = Vec::Zero(w.b_out.size());
    return g;
  }

  void setZero() {
    for (int b = 0; b < 4; ++b) {
      d_in[b].setZero();
      d_rec[b].setZero();
    }
    d_out.setZero();
    d_b.setZero();
  }

  LstmGradients& operator+=(const LstmGradients& o) {
    for (int b = 0; b < 4; ++b) {
      require(d_in[b].rows() == o.d_in[b].rows() &&
                  d_rec[b].rows() == o.d_rec[b].rows(),
              "LstmGradients: shape mismatch in accumulate");
      d_in[b] += o.d_in[b];
      d_rec[b] += o.d_rec[b];
    }
    d_out += o.d_out;
    d_b += o.d_b;
    return *this;
  }
};

// Largest elementwise relative deviation |a-b| / (|b| + eps). The tiny eps
// guards entries where the reference gradient is exactly zero.
inline double max_relative_error(const Mat& a, const Mat& b,
                                 double eps = 1e-30) {
  return ((a - b).cwiseAbs().array() / (b.cwiseAbs().array() + eps))
      .maxCoeff();
}

inline double max_relative_error(const RnnGradients& a, const RnnGradients& b,
                                 double eps = 1e-30) {
  double m = max_relative_error(a.d_in, b.d_in, eps);
  m = std::max(m, max_relative_error(a.d_rec, b.d_rec, eps));
  m = std::max(m, max_relative_error(a.d_out, b.d_out, eps));
  m = std::max(m, max_relative_error(Mat(a.d_b), Mat(b.d_b), eps));
  return m;
}

inline double max_relative_error(const LstmGradients& a,
                                 const LstmGradients& b, double eps = 1e-30) {
  double m = 0.0;
  for (int blk = 0; blk < 4; ++blk) {
    m = std::max(m, max_relative_error(a.d_in[blk], b.d_in[blk], eps));
    m = std::max(m, max_relative_error(a.d_rec[blk], b.d_rec[blk], eps));
  }
  m = std::max(m, max_relative_error(a.d_out, b.d_out, eps));
  m = std::max(m, max_relative_error(Mat(a.d_b), Mat(b.d_b), eps));
  return m;
}

}  // namespace traceprop

#endif  // TRACEPROP_GRADIENTS_HPP_
