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
// Batch experiment runner. Exit codes: 0 ok, 1 configuration error,
// 2 verification failure, 3 numeric error.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "traceprop/harness.hpp"

namespace {

int cmd_run(const std::string& config_path) {
  const traceprop::ExperimentConfig cfg = traceprop::load_config(config_path);
  const traceprop::RunReport report = traceprop::run_experiment(cfg);
  std::printf("run complete: %zu iterations, final metric %.6g\n",
              report.rows.size(), report.final_metric());
  std::printf("metrics: %s\nsummary: %s\n", report.metrics_path.c_str(),
              report.summary_path.c_str());
  return 0;
}

int cmd_verify(const std::vector<std::string>& models, int instances,
               std::uint64_t seed, const std::string& report_path,
               bool truncated) {
  const traceprop::VerifySummary summary =
      traceprop::run_verifier(models, instances, seed, 1e-10, truncated);
  for (const auto& r : summary.reports)
    std::printf("%-8s instances=%d max_rel_error=%.3e %s\n", r.model.c_str(),
                r.instances, r.max_rel_error, r.pass ? "ok" : "VIOLATION");
  if (!report_path.empty())
    traceprop::write_verifier_report(summary, report_path);
  return summary.pass ? 0 : 2;
}

int cmd_gen_task(const std::string& task, std::uint64_t seed,
                 const std::string& out) {
  traceprop::TaskSample sample;
  if (task == "pattern") {
    sample = traceprop::gen_pattern_task(seed);
  } else if (task == "store-recall") {
    sample = traceprop::gen_store_recall(seed);
  } else if (task == "copy-repeat") {
    sample = traceprop::gen_copy_repeat(traceprop::CurriculumState{}, seed);
  } else {
    throw traceprop::ConfigError("unknown task: " + task);
  }
  traceprop::write_task_sample(sample, out);
  std::printf("wrote %s (%ld steps, %ld inputs, %ld targets)\n", out.c_str(),
              long(sample.inputs.rows()), long(sample.inputs.cols()),
              long(sample.targets.cols()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"traceprop: eligibility-trace training for recurrent networks"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "run an experiment from a config");
  run->add_option("config", config_path, "run configuration file")->required();

  std::vector<std::string> models = {"lif", "alif", "sigmoid", "lstm"};
  int instances = 200;
  std::uint64_t verify_seed = 20260810;
  std::string report_path;
  bool truncated = false;
  CLI::App* verify = app.add_subcommand(
      "verify", "check the trace/backward gradient identity");
  verify->add_option("--models", models, "model families to verify");
  verify->add_option("--instances", instances, "instances per model");
  verify->add_option("--seed", verify_seed, "suite seed");
  verify->add_option("--report", report_path, "write a JSON report here");
  verify->add_flag("--truncated-elig", truncated,
                   "verify with truncated traces (negative control; expected "
                   "to report violations)");

  std::string task, out_path;
  std::uint64_t task_seed = 1;
  CLI::App* gen = app.add_subcommand("gen-task", "write one generated trial");
  gen->add_option("task", task, "pattern | store-recall | copy-repeat")
      ->required();
  gen->add_option("--seed", task_seed, "generator seed");
  gen->add_option("--out", out_path, "output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path);
    if (verify->parsed())
      return cmd_verify(models, instances, verify_seed, report_path, truncated);
    if (gen->parsed()) return cmd_gen_task(task, task_seed, out_path);
  } catch (const traceprop::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 1;
  } catch (const traceprop::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
