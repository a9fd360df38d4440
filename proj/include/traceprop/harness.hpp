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
// Configuration-driven experiment runner: builds the network and task from a
// run configuration, executes the training loop, and emits per-iteration
// metrics (append-only CSV) plus a JSON summary. Also hosts the gradient
// verifier used by CI.

#ifndef TRACEPROP_HARNESS_HPP_
#define TRACEPROP_HARNESS_HPP_

#include <chrono>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "traceprop/config.hpp"
#include "traceprop/train_eprop1.hpp"
#include "traceprop/train_interval.hpp"

namespace traceprop {

struct IterationRow {
  long iteration = 0;
  double wall_ms = 0.0;
  double loss = 0.0;
  double metric = 0.0;
  double lr = 0.0;
  double firing_rate_hz = 0.0;
};

struct RunReport {
  std::vector<IterationRow> rows;
  long solved_iteration = -1;  // first iteration below the stop threshold
  int final_level = 0;         // copy-repeat curriculum level
  std::string metrics_path;
  std::string summary_path;

  double final_metric() const {
    return rows.empty() ? 0.0 : rows.back().metric;
  }
  double final_rate_hz() const {
    return rows.empty() ? 0.0 : rows.back().firing_rate_hz;
  }
  // Mean metric / rate over the last `fraction` of iterations.
  double tail_mean_metric(double fraction = 0.1) const {
    return tail_mean([](const IterationRow& r) { return r.metric; }, fraction);
  }
  double tail_mean_rate(double fraction = 0.1) const {
    return tail_mean(
        [](const IterationRow& r) { return r.firing_rate_hz; }, fraction);
  }

 private:
  template <typename F>
  double tail_mean(F f, double fraction) const {
    if (rows.empty()) return 0.0;
    const size_t k = std::max<size_t>(1, size_t(rows.size() * fraction));
    double sum = 0.0;
    for (size_t i = rows.size() - k; i < rows.size(); ++i) sum += f(rows[i]);
    return sum / double(k);
  }
};

namespace detail {

class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, bool wall_clock)
      : out_(path), wall_clock_(wall_clock),
        start_(std::chrono::steady_clock::now()) {
    require(out_.good(), "cannot open metrics file: " + path);
    out_ << "iteration,wall_ms,loss,metric,lr,firing_rate_hz\n";
    out_.flush();
  }

  IterationRow write(long iteration, double loss, double metric, double lr,
                     double rate_hz) {
    IterationRow row;
    row.iteration = iteration;
    row.wall_ms = wall_clock_
                      ? std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start_)
                            .count()
                      : 0.0;
    row.loss = loss;
    row.metric = metric;
    row.lr = lr;
    row.firing_rate_hz = rate_hz;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%ld,%.3f,%.17g,%.17g,%.17g,%.17g\n",
                  row.iteration, row.wall_ms, row.loss, row.metric, row.lr,
                  row.firing_rate_hz);
    out_ << buf;
    out_.flush();
    return row;
  }

 private:
  std::ofstream out_;
  bool wall_clock_;
  std::chrono::steady_clock::time_point start_;
};

inline SpikingTrainerConfig spiking_config(const ExperimentConfig& cfg,
                                           int n_in, int n_out) {
  SpikingTrainerConfig t;
  const LifParams lif = LifParams::from_tau(cfg.tau_m_ms, cfg.v_th, cfg.gamma,
                                            cfg.refractory_steps);
  if (cfg.n_adaptive > 0) {
    Vec beta = Vec::Zero(cfg.n_rec);
    beta.tail(cfg.n_adaptive).setConstant(cfg.alif_beta);
    t.model = AlifParams::make(lif, beta, cfg.tau_a_ms);
  } else {
    t.model = lif;
  }
  t.n_in = n_in;
  t.n_rec = cfg.n_rec;
  t.n_out = n_out;
  t.kappa = decay_from_tau(cfg.tau_out_ms, 1.0);
  t.recurrent = cfg.recurrent;
  t.reg.f_target_hz = cfg.reg_f_target_hz;
  t.reg.lambda = cfg.reg_lambda;
  t.reg.dt_ms = 1.0;

  if (cfg.algorithm == "bptt") {
    t.algo = SpikingAlgo::kBptt;
  } else if (cfg.algorithm == "eprop1" || cfg.algorithm == "eprop1-symmetric" ||
             cfg.algorithm == "eprop1-global") {
    t.algo = SpikingAlgo::kEprop1;
  } else if (cfg.algorithm == "eprop1-clopath") {
    t.algo = SpikingAlgo::kEprop1;
    t.clopath = true;
  } else if (cfg.algorithm == "eprop1-truncated-elig") {
    t.algo = SpikingAlgo::kEprop1;
    t.truncated_elig = true;
  } else {
    throw ConfigError("algorithm '" + cfg.algorithm +
                      "' is not valid for task '" + cfg.task + "'");
  }
  return t;
}

inline FeedbackSequence make_feedback(const ExperimentConfig& cfg,
                                      const NetworkWeights& w, int horizon) {
  const double variance =
      cfg.feedback_variance < 0.0 ? 1.0 / cfg.n_rec : cfg.feedback_variance;
  auto rng = make_rng(cfg.seed, 0xFEEDBACC);
  if (cfg.algorithm == "eprop1-global" || cfg.feedback_kind == "uniform")
    return FeedbackSequence::fixed(
        FeedbackMatrix::uniform(w.n_rec(), w.n_out()));
  if (cfg.algorithm == "eprop1-symmetric" || cfg.feedback_kind == "symmetric")
    return FeedbackSequence::fixed(FeedbackMatrix::symmetric(w));
  if (cfg.feedback_resample_steps > 0)
    return FeedbackSequence::resampled(w.n_rec(), w.n_out(),
                                       cfg.feedback_resample_steps, horizon,
                                       rng, variance);
  return FeedbackSequence::fixed(
      FeedbackMatrix::random(w.n_rec(), w.n_out(), rng, variance));
}

inline bool symmetric_feedback(const ExperimentConfig& cfg) {
  return cfg.algorithm == "eprop1-symmetric" ||
         cfg.feedback_kind == "symmetric";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Task runners.

inline RunReport run_pattern_task(const ExperimentConfig& cfg,
                                  detail::MetricsWriter& csv) {
  const TaskSample sample = gen_pattern_task(split_seed(cfg.seed, 0x7A5C));
  const int n_in = int(sample.inputs.cols()), n_out = int(sample.targets.cols());
  SpikingTrainerConfig trainer = detail::spiking_config(cfg, n_in, n_out);

  auto w_rng = make_rng(cfg.seed, 0x1717);
  NetworkWeights w =
      init_weights(n_in, cfg.n_rec, n_out, w_rng, cfg.init_scale);
  FeedbackSequence feedback =
      detail::make_feedback(cfg, w, int(sample.inputs.rows()));
  AdamState opt = AdamState::init(adam_block_sizes(w), cfg.adam_beta1,
                                  cfg.adam_beta2, cfg.adam_epsilon);
  Schedule sched{cfg.lr, cfg.lr_decay_factor, cfg.lr_decay_every};

  const std::vector<TaskSample> batch(cfg.batch_size, sample);
  RunReport report;
  for (long it = 0; it < cfg.iterations; ++it) {
    if (detail::symmetric_feedback(cfg))
      feedback = FeedbackSequence::fixed(FeedbackMatrix::symmetric(w));
    const double rate = sched.rate_at(int(it));
    const BatchResult batch_res = run_spiking_batch(
        trainer, w, feedback, batch, cfg.resolved_threads());
    adam_update(w, batch_res.grads, opt, rate);

    const double metric = nmse(batch_res.last_y.bottomRows(sample.targets.rows()),
                               sample.targets, sample.mask);
    report.rows.push_back(csv.write(it, batch_res.mean_loss, metric, rate,
                                    batch_res.rate_hz.mean()));
  }
  return report;
}

inline RunReport run_store_recall_task(const ExperimentConfig& cfg,
                                       detail::MetricsWriter& csv) {
  const StoreRecallConfig task_cfg;
  SpikingTrainerConfig trainer =
      detail::spiking_config(cfg, task_cfg.n_in(), 2);

  auto w_rng = make_rng(cfg.seed, 0x1717);
  NetworkWeights w =
      init_weights(task_cfg.n_in(), cfg.n_rec, 2, w_rng, cfg.init_scale);
  FeedbackSequence feedback =
      detail::make_feedback(cfg, w, task_cfg.trial_ms);
  AdamState opt = AdamState::init(adam_block_sizes(w), cfg.adam_beta1,
                                  cfg.adam_beta2, cfg.adam_epsilon);
  Schedule sched{cfg.lr, cfg.lr_decay_factor, cfg.lr_decay_every};

  // Fixed held-out set for the misclassification metric.
  std::vector<TaskSample> val;
  val.reserve(cfg.eval_trials);
  for (int v = 0; v < cfg.eval_trials; ++v)
    val.push_back(gen_store_recall(split_seed(cfg.seed, 0xE0000 + v)));

  auto evaluate = [&]() {
    long wrong = 0, total = 0;
    std::vector<std::pair<long, long>> counts(val.size());
    parallel_for(int(val.size()), cfg.resolved_threads(), [&](int i) {
      const TaskSample& s = val[i];
      if (s.windows.empty()) {
        counts[i] = {0, 0};
        return;
      }
      const Trajectory traj =
          simulate_trial(trainer.model, w, s.inputs, trainer.kappa, false);
      long bad = 0;
      for (size_t k = 0; k < s.windows.size(); ++k) {
        Vec mean = Vec::Zero(2);
        for (int t = s.windows[k].first; t < s.windows[k].second; ++t)
          mean += traj.y.row(t).transpose();
        const int pred = mean[1] > mean[0] ? 1 : 0;
        bad += (pred != s.labels[k]);
      }
      counts[i] = {bad, long(s.windows.size())};
    });
    for (const auto& [bad, tot] : counts) {
      wrong += bad;
      total += tot;
    }
    return total == 0 ? 1.0 : double(wrong) / double(total);
  };

  RunReport report;
  for (long it = 0; it < cfg.iterations; ++it) {
    if (detail::symmetric_feedback(cfg))
      feedback = FeedbackSequence::fixed(FeedbackMatrix::symmetric(w));
    std::vector<TaskSample> batch(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b)
      batch[b] = gen_store_recall(
          split_seed(cfg.seed, 0x530000 + it * cfg.batch_size + b));
    const double rate = sched.rate_at(int(it));
    const BatchResult batch_res = run_spiking_batch(
        trainer, w, feedback, batch, cfg.resolved_threads());
    adam_update(w, batch_res.grads, opt, rate);

    const double misclass = evaluate();
    report.rows.push_back(csv.write(it, batch_res.mean_loss, misclass, rate,
                                    batch_res.rate_hz.mean()));
    if (cfg.stop_misclass > 0.0 && misclass < cfg.stop_misclass) {
      report.solved_iteration = it;
      break;
    }
  }
  return report;
}

inline RunReport run_copy_repeat_task(const ExperimentConfig& cfg,
                                      detail::MetricsWriter& csv) {
  CopyRepeatConfig trainer;
  trainer.n_units = cfg.lstm_units;
  trainer.batch = cfg.batch_size;
  trainer.trunc.delta_t = cfg.delta_t;
  trainer.trunc.eta_sg = cfg.eta_sg;
  trainer.trunc.mode = interval_scheme_from_string(cfg.algorithm);
  trainer.sg_hidden = cfg.sg_hidden;
  trainer.lr = cfg.lr;
  trainer.sg_lr = cfg.sg_lr > 0.0 ? cfg.sg_lr : cfg.lr;
  trainer.max_updates = cfg.iterations;
  trainer.seed = cfg.seed;
  trainer.init_scale = cfg.init_scale;
  trainer.n_threads = cfg.resolved_threads();

  RunReport report;
  trainer.on_record = [&](const CopyRepeatRecord& rec) {
    report.rows.push_back(
        csv.write(rec.update, rec.bits, rec.level, cfg.lr, 0.0));
  };
  const CopyRepeatResult res = train_copy_repeat(trainer);
  report.final_level = res.cur.level();
  return report;
}

// Executes the configured experiment, writing metrics.csv and summary.json
// into the output directory. Runs are reproducible from (config, seed); with
// metrics.wall_clock = false the CSV is byte-identical across repeats.
inline RunReport run_experiment(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  const std::string metrics_path = cfg.output_dir + "/metrics.csv";
  const std::string summary_path = cfg.output_dir + "/summary.json";
  detail::MetricsWriter csv(metrics_path, cfg.wall_clock);

  RunReport report;
  if (cfg.task == "pattern") {
    report = run_pattern_task(cfg, csv);
  } else if (cfg.task == "store-recall") {
    report = run_store_recall_task(cfg, csv);
  } else if (cfg.task == "copy-repeat") {
    report = run_copy_repeat_task(cfg, csv);
  } else {
    throw ConfigError("unknown task: " + cfg.task);
  }
  report.metrics_path = metrics_path;
  report.summary_path = summary_path;

  nlohmann::json j;
  j["task"] = cfg.task;
  j["algorithm"] = cfg.algorithm;
  j["seed"] = cfg.seed;
  j["iterations_run"] = report.rows.size();
  j["final_loss"] = report.rows.empty() ? 0.0 : report.rows.back().loss;
  j["final_metric"] = report.final_metric();
  j["final_rate_hz"] = report.final_rate_hz();
  if (report.solved_iteration >= 0)
    j["solved_iteration"] = report.solved_iteration;
  if (cfg.task == "copy-repeat") j["final_level"] = report.final_level;
  std::ofstream out(summary_path);
  out << j.dump(2) << "\n";
  return report;
}

// ---------------------------------------------------------------------------
// Gradient verifier.

struct VerifySummary {
  std::vector<VerifierReport> reports;
  bool pass = true;
};

inline VerifySummary run_verifier(const std::vector<std::string>& models,
                                  int instances = 200,
                                  std::uint64_t seed = 20260810,
                                  double tolerance = 1e-10,
                                  bool truncated_elig = false) {
  VerifySummary summary;
  for (const std::string& m : models) {
    require(m == "lif" || m == "alif" || m == "sigmoid" || m == "lstm",
            "verify: unknown model '" + m + "'");
    summary.reports.push_back(
        run_factorization_suite(m, instances, seed, tolerance, truncated_elig));
    summary.pass = summary.pass && summary.reports.back().pass;
  }
  return summary;
}

inline void write_verifier_report(const VerifySummary& summary,
                                  const std::string& path) {
  nlohmann::json j;
  j["pass"] = summary.pass;
  for (const VerifierReport& r : summary.reports) {
    nlohmann::json m;
    m["instances"] = r.instances;
    m["max_rel_error"] = r.max_rel_error;
    m["tolerance"] = r.tolerance;
    m["pass"] = r.pass;
    j["models"][r.model] = m;
  }
  std::ofstream out(path);
  require(out.good(), "cannot open verifier report: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace traceprop

#endif  // TRACEPROP_HARNESS_HPP_
