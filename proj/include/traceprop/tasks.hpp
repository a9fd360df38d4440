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
// Seedable generators for the three synthetic benchmark tasks and their
// evaluation metrics.

#ifndef TRACEPROP_TASKS_HPP_
#define TRACEPROP_TASKS_HPP_

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "traceprop/common.hpp"
#include "traceprop/loss.hpp"

namespace traceprop {

// One generated trial: spike or real-valued inputs, a target series, and the
// per-step loss mask. Classification tasks also carry their decision
// windows.
struct TaskSample {
  Mat inputs;   // [T x n_in]
  Mat targets;  // [T x n_out]
  Vec mask;     // [T]
  LossKind loss_kind = LossKind::kMse;

  // Store-recall decision windows: [start, end) in 1-based steps, plus the
  // class label (the most recently stored bit).
  std::vector<std::pair<int, int>> windows;
  std::vector<int> labels;

  LossSpec loss() const {
    LossSpec l;
    l.kind = loss_kind;
    l.targets = targets;
    l.mask = mask;
    return l;
  }
};

// ---------------------------------------------------------------------------
// Task: pattern generation.

struct PatternTaskConfig {
  int duration_ms = 1000;
  int n_out = 3;
  int clock_groups = 5;
  int neurons_per_group = 4;
  double clock_rate_hz = 100.0;
  double dt_ms = 1.0;

  int n_in() const { return clock_groups * neurons_per_group; }
};

// Three target channels over one second, each the sum of four sinusoids at
// 1, 2, 3 and 5 Hz with amplitudes U[0.5, 2] and phases U[0, 2pi). The input
// is a 5-group clock; group g fires regular 100 Hz spikes while the pattern
// is inside its fifth of the trial and is silent otherwise.
inline TaskSample gen_pattern_task(std::uint64_t seed,
                                   const PatternTaskConfig& cfg = {}) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> amp(0.5, 2.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  const double freqs[4] = {1.0, 2.0, 3.0, 5.0};

  const int T = static_cast<int>(cfg.duration_ms / cfg.dt_ms);
  TaskSample s;
  s.loss_kind = LossKind::kMse;
  s.targets = Mat::Zero(T, cfg.n_out);
  s.mask = Vec::Ones(T);
  for (int c = 0; c < cfg.n_out; ++c) {
    double a[4], ph[4];
    for (int m = 0; m < 4; ++m) {
      a[m] = amp(rng);
      ph[m] = phase(rng);
    }
    for (int t = 0; t < T; ++t) {
      const double time_s = t * cfg.dt_ms * 1e-3;
      double v = 0.0;
      for (int m = 0; m < 4; ++m)
        v += a[m] * std::sin(2.0 * M_PI * freqs[m] * time_s + ph[m]);
      s.targets(t, c) = v;
    }
  }

  s.inputs = Mat::Zero(T, cfg.n_in());
  const int group_ms = cfg.duration_ms / cfg.clock_groups;
  const int isi = static_cast<int>(1000.0 / (cfg.clock_rate_hz * cfg.dt_ms));
  for (int t = 0; t < T; ++t) {
    const int ms = static_cast<int>(t * cfg.dt_ms);
    const int g = std::min(ms / group_ms, cfg.clock_groups - 1);
    if ((ms - g * group_ms) % isi == 0)
      for (int j = 0; j < cfg.neurons_per_group; ++j)
        s.inputs(t, g * cfg.neurons_per_group + j) = 1.0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Task: store-recall.

struct StoreRecallConfig {
  int trial_ms = 2400;
  int period_ms = 200;       // D, the command scheduling period
  double p_command = 1.0 / 6.0;
  double rate_hz = 50.0;     // firing rate of active input groups
  int neurons_per_group = 25;
  double dt_ms = 1.0;

  int periods() const { return trial_ms / period_ms; }
  int n_in() const { return 4 * neurons_per_group; }
};

enum class CommandKind { kNone, kStore, kRecall };

struct StoreRecallSchedule {
  std::vector<int> value_bits;         // one bit per period
  std::vector<CommandKind> commands;   // one command per period
};

// Command schedule: per 200 ms period the value stream carries a fresh
// random bit. Before anything is stored only STORE can be drawn (p = 1/6);
// afterwards RECALL is drawn with p = 1/6, otherwise a new STORE with
// p = 1/6. Simultaneous commands cannot occur by construction.
inline StoreRecallSchedule gen_store_recall_schedule(std::mt19937_64& rng,
                                                     int periods,
                                                     double p_command) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  StoreRecallSchedule sch;
  bool stored = false;
  for (int p = 0; p < periods; ++p) {
    sch.value_bits.push_back(u(rng) < 0.5 ? 1 : 0);
    const double r = u(rng);
    CommandKind cmd = CommandKind::kNone;
    if (!stored) {
      if (r < p_command) cmd = CommandKind::kStore;
    } else {
      if (r < p_command) {
        cmd = CommandKind::kRecall;
      } else if (r < 2.0 * p_command) {
        cmd = CommandKind::kStore;
      }
    }
    if (cmd == CommandKind::kStore) stored = true;
    sch.commands.push_back(cmd);
  }
  return sch;
}

// Input groups (25 neurons each): value-0, value-1, STORE, RECALL. During a
// STORE period the store group and the group of the presented bit fire
// Poisson spikes at 50 Hz (per-step Bernoulli rate*dt); during a RECALL
// period the recall group fires; otherwise the input neurons are silent.
// The target is the bit of the most recent STORE; the error is defined only
// while a RECALL command is present.
inline TaskSample gen_store_recall(std::uint64_t seed,
                                   const StoreRecallConfig& cfg = {}) {
  auto rng = make_rng(seed);
  const StoreRecallSchedule sch =
      gen_store_recall_schedule(rng, cfg.periods(), cfg.p_command);

  const int steps_per_period = static_cast<int>(cfg.period_ms / cfg.dt_ms);
  const int T = cfg.periods() * steps_per_period;
  const double p_spike = cfg.rate_hz * cfg.dt_ms * 1e-3;
  std::uniform_real_distribution<double> u(0.0, 1.0);

  TaskSample s;
  s.loss_kind = LossKind::kCrossEntropy;
  s.inputs = Mat::Zero(T, cfg.n_in());
  s.targets = Mat::Zero(T, 2);
  s.mask = Vec::Zero(T);

  int stored_bit = -1;
  for (int p = 0; p < cfg.periods(); ++p) {
    const CommandKind cmd = sch.commands[p];
    if (cmd == CommandKind::kStore) stored_bit = sch.value_bits[p];
    const int group_cmd = cmd == CommandKind::kStore   ? 2
                          : cmd == CommandKind::kRecall ? 3
                                                        : -1;
    const int t0 = p * steps_per_period;
    for (int t = t0; t < t0 + steps_per_period; ++t) {
      if (cmd == CommandKind::kStore) {
        const int vg = sch.value_bits[p];
        for (int j = 0; j < cfg.neurons_per_group; ++j)
          if (u(rng) < p_spike)
            s.inputs(t, vg * cfg.neurons_per_group + j) = 1.0;
      }
      if (group_cmd >= 0)
        for (int j = 0; j < cfg.neurons_per_group; ++j)
          if (u(rng) < p_spike)
            s.inputs(t, group_cmd * cfg.neurons_per_group + j) = 1.0;
      if (cmd == CommandKind::kRecall) {
        s.mask[t] = 1.0;
        s.targets(t, stored_bit) = 1.0;
      }
    }
    if (cmd == CommandKind::kRecall) {
      s.windows.emplace_back(t0 + 1, t0 + steps_per_period + 1);
      s.labels.push_back(stored_bit);
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Task: copy-repeat.

// Task difficulty; increments alternate between the pattern length and the
// repetition count, starting with the pattern length.
struct CurriculumState {
  int n_pattern = 1;
  int n_repetitions = 1;
  bool next_is_pattern = true;

  int level() const { return n_pattern + n_repetitions; }

  void advance() {
    if (next_is_pattern) {
      ++n_pattern;
    } else {
      ++n_repetitions;
    }
    next_is_pattern = !next_is_pattern;
  }
};

// Input: an 8-bit random pattern of length n_pattern, a stop step on the 9th
// channel, then the repetition count one-hot over the 9 channels. Output
// phase: n_repetitions copies of the pattern followed by a stop character,
// trained with base-2 binary cross-entropy on those steps only.
inline TaskSample gen_copy_repeat(const CurriculumState& cur,
                                  std::uint64_t seed) {
  require(cur.n_pattern >= 1 && cur.n_repetitions >= 1,
          "gen_copy_repeat: curriculum must be >= 1");
  require(cur.n_repetitions <= 9,
          "gen_copy_repeat: repetition count exceeds one-hot capacity");
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  const int in_phase = cur.n_pattern + 2;
  const int out_phase = cur.n_repetitions * cur.n_pattern + 1;
  const int T = in_phase + out_phase;

  TaskSample s;
  s.loss_kind = LossKind::kBinaryCeBits;
  s.inputs = Mat::Zero(T, 9);
  s.targets = Mat::Zero(T, 9);
  s.mask = Vec::Zero(T);

  Mat pattern(cur.n_pattern, 8);
  for (int r = 0; r < cur.n_pattern; ++r)
    for (int c = 0; c < 8; ++c) pattern(r, c) = u(rng) < 0.5 ? 1.0 : 0.0;

  for (int r = 0; r < cur.n_pattern; ++r)
    s.inputs.row(r).head(8) = pattern.row(r);
  s.inputs(cur.n_pattern, 8) = 1.0;                     // stop character
  s.inputs(cur.n_pattern + 1, cur.n_repetitions - 1) = 1.0;  // one-hot count

  int t = in_phase;
  for (int rep = 0; rep < cur.n_repetitions; ++rep)
    for (int r = 0; r < cur.n_pattern; ++r, ++t) {
      s.targets.row(t).head(8) = pattern.row(r);
      s.mask[t] = 1.0;
    }
  s.targets(t, 8) = 1.0;  // final stop
  s.mask[t] = 1.0;
  return s;
}

// ---------------------------------------------------------------------------
// Metrics.

// Mean squared error normalized by the masked target variance (per-channel
// means): predicting the channel mean scores exactly 1.
inline double nmse(const Mat& outputs, const Mat& targets, const Vec& mask) {
  require(outputs.rows() == targets.rows() && mask.size() == targets.rows(),
          "nmse: shape mismatch");
  const double wsum = mask.sum();
  require(wsum > 0.0, "nmse: empty mask");
  double num = 0.0, den = 0.0;
  for (int c = 0; c < targets.cols(); ++c) {
    const Arr w = mask.array();
    const Arr tc = targets.col(c).array();
    const double mean = (w * tc).sum() / wsum;
    num += (w * (outputs.col(c).array() - tc).square()).sum();
    den += (w * (tc - mean).square()).sum();
  }
  require(den > 0.0, "nmse: target variance is zero");
  return num / den;
}

// Fraction of decision windows where the readout with the highest mean
// activation is not the stored class. Ties go to the lowest class index.
inline double misclassification_rate(const Mat& y_rows,
                                     const std::vector<std::pair<int, int>>& windows,
                                     const std::vector<int>& labels) {
  require(!windows.empty(), "misclassification_rate: no decision windows");
  require(windows.size() == labels.size(),
          "misclassification_rate: label count mismatch");
  int wrong = 0;
  for (size_t i = 0; i < windows.size(); ++i) {
    Vec mean = Vec::Zero(y_rows.cols());
    for (int t = windows[i].first; t < windows[i].second; ++t)
      mean += y_rows.row(t).transpose();
    int best = 0;
    for (int k = 1; k < mean.size(); ++k)
      if (mean[k] > mean[best]) best = k;
    if (best != labels[i]) ++wrong;
  }
  return double(wrong) / double(windows.size());
}

// Base-2 cross entropy summed over the masked output steps of one sequence.
inline double bits_per_sequence(const Mat& y_rows, const TaskSample& sample) {
  LossSpec loss = sample.loss();
  require(loss.kind == LossKind::kBinaryCeBits,
          "bits_per_sequence: wrong loss kind");
  return loss.total(y_rows);
}

// Writes a sample in a columnar text format: one row per step holding the
// step index, every input channel, every target channel, and the mask.
inline void write_task_sample(const TaskSample& s, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "write_task_sample: cannot open " + path);
  out << "# columns: t";
  for (int i = 0; i < s.inputs.cols(); ++i) out << " in" << i;
  for (int i = 0; i < s.targets.cols(); ++i) out << " target" << i;
  out << " mask\n";
  for (int t = 0; t < s.inputs.rows(); ++t) {
    out << t;
    for (int i = 0; i < s.inputs.cols(); ++i) out << ' ' << s.inputs(t, i);
    for (int i = 0; i < s.targets.cols(); ++i) out << ' ' << s.targets(t, i);
    out << ' ' << s.mask[t] << '\n';
  }
}

}  // namespace traceprop

#endif  // TRACEPROP_TASKS_HPP_
