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
// Flat key-value run configuration with dotted section names. Unknown keys
// are hard errors so hyperparameter typos cannot pass silently.

#ifndef TRACEPROP_CONFIG_HPP_
#define TRACEPROP_CONFIG_HPP_

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "traceprop/common.hpp"

namespace traceprop {

struct ExperimentConfig {
  std::string task;       // pattern | store-recall | copy-repeat
  std::string algorithm;  // see algorithm lists in the README
  std::uint64_t seed = 1;
  long iterations = 100;  // weight updates (interval updates for copy-repeat)
  int batch_size = 1;
  std::string output_dir = "run";
  int threads = 0;  // 0: TRACEPROP_THREADS or single-threaded

  int n_rec = 200;
  int n_adaptive = 0;
  bool recurrent = true;

  double tau_m_ms = 20.0;
  double v_th = 0.61;
  double gamma = 0.3;
  int refractory_steps = 5;
  double alif_beta = 0.03;
  double tau_a_ms = 1200.0;
  double tau_out_ms = 20.0;

  std::string feedback_kind = "random";
  double feedback_variance = -1.0;  // -1: the 1/n default
  int feedback_resample_steps = 0;

  double lr = 0.003;
  double lr_decay_factor = 1.0;
  int lr_decay_every = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  double init_scale = 1.0;
  double reg_f_target_hz = 0.0;
  double reg_lambda = 0.0;

  int eval_trials = 64;
  double stop_misclass = 0.0;  // 0 disables early stopping

  int lstm_units = 64;
  int delta_t = 4;
  double eta_sg = 0.1;
  int sg_hidden = 512;
  double sg_lr = 0.0;  // 0: use optimizer.lr

  bool wall_clock = true;

  int resolved_threads() const {
    return threads > 0 ? threads : env_thread_count();
  }
};

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    require(pos == v.size(), "trailing characters");
    return d;
  } catch (...) {
    throw ConfigError("config key '" + key + "': bad numeric value '" + v + "'");
  }
}

inline long parse_long(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long d = std::stol(v, &pos);
    require(pos == v.size(), "trailing characters");
    return d;
  } catch (...) {
    throw ConfigError("config key '" + key + "': bad integer value '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': bad boolean value '" + v + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(const std::map<std::string, std::string>& kv) {
  ExperimentConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "task") c.task = value;
    else if (key == "algorithm") c.algorithm = value;
    else if (key == "seed") c.seed = std::uint64_t(detail::parse_long(key, value));
    else if (key == "iterations") c.iterations = detail::parse_long(key, value);
    else if (key == "batch_size") c.batch_size = int(detail::parse_long(key, value));
    else if (key == "output_dir") c.output_dir = value;
    else if (key == "threads") c.threads = int(detail::parse_long(key, value));
    else if (key == "network.n_rec") c.n_rec = int(detail::parse_long(key, value));
    else if (key == "network.n_adaptive") c.n_adaptive = int(detail::parse_long(key, value));
    else if (key == "network.recurrent") c.recurrent = detail::parse_bool(key, value);
    else if (key == "lif.tau_m_ms") c.tau_m_ms = detail::parse_double(key, value);
    else if (key == "lif.v_th") c.v_th = detail::parse_double(key, value);
    else if (key == "lif.gamma") c.gamma = detail::parse_double(key, value);
    else if (key == "lif.refractory_steps") c.refractory_steps = int(detail::parse_long(key, value));
    else if (key == "alif.beta") c.alif_beta = detail::parse_double(key, value);
    else if (key == "alif.tau_a_ms") c.tau_a_ms = detail::parse_double(key, value);
    else if (key == "readout.tau_out_ms") c.tau_out_ms = detail::parse_double(key, value);
    else if (key == "feedback.kind") c.feedback_kind = value;
    else if (key == "feedback.variance")
      c.feedback_variance = (value == "1/n") ? -1.0 : detail::parse_double(key, value);
    else if (key == "feedback.resample_period_steps")
      c.feedback_resample_steps = int(detail::parse_long(key, value));
    else if (key == "optimizer.lr") c.lr = detail::parse_double(key, value);
    else if (key == "optimizer.decay_factor") c.lr_decay_factor = detail::parse_double(key, value);
    else if (key == "optimizer.decay_every") c.lr_decay_every = int(detail::parse_long(key, value));
    else if (key == "optimizer.beta1") c.adam_beta1 = detail::parse_double(key, value);
    else if (key == "optimizer.beta2") c.adam_beta2 = detail::parse_double(key, value);
    else if (key == "optimizer.epsilon") c.adam_epsilon = detail::parse_double(key, value);
    else if (key == "init.scale") c.init_scale = detail::parse_double(key, value);
    else if (key == "regularization.f_target_hz") c.reg_f_target_hz = detail::parse_double(key, value);
    else if (key == "regularization.lambda") c.reg_lambda = detail::parse_double(key, value);
    else if (key == "store_recall.eval_trials") c.eval_trials = int(detail::parse_long(key, value));
    else if (key == "store_recall.stop_misclass") c.stop_misclass = detail::parse_double(key, value);
    else if (key == "lstm.n_units") c.lstm_units = int(detail::parse_long(key, value));
    else if (key == "truncation.delta_t") c.delta_t = int(detail::parse_long(key, value));
    else if (key == "truncation.eta_sg") c.eta_sg = detail::parse_double(key, value);
    else if (key == "sg.hidden") c.sg_hidden = int(detail::parse_long(key, value));
    else if (key == "sg.lr") c.sg_lr = detail::parse_double(key, value);
    else if (key == "metrics.wall_clock") c.wall_clock = detail::parse_bool(key, value);
    else throw ConfigError("unknown config key: " + key);
  }
  require(!c.task.empty(), "config: missing required key 'task'");
  require(!c.algorithm.empty(), "config: missing required key 'algorithm'");
  require(c.iterations >= 0, "config key 'iterations': must be >= 0");
  require(c.batch_size >= 1, "config key 'batch_size': must be >= 1");
  return c;
}

inline std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw ConfigError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (kv.count(key))
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

inline ExperimentConfig load_config(const std::string& path) {
  return parse_config(read_key_values(path));
}

}  // namespace traceprop

#endif  // TRACEPROP_CONFIG_HPP_
