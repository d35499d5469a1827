/* Copyright 2026 The bam Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Command-line entry point: synth, train, eval, analyze.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "bam/analyze.h"
#include "bam/config.h"
#include "bam/dataset.h"
#include "bam/synthetic.h"
#include "bam/trainer.h"

namespace {

namespace fs = std::filesystem;

void PrintMetrics(const std::map<std::string, double>& metrics) {
  for (const auto& [key, value] : metrics) {
    std::cout << key << " " << value << "\n";
  }
}

int RunSynth(const std::string& out, int n, uint64_t seed,
             const bam::SyntheticOptions& options) {
  bam::Dataset ds = bam::GenerateSynthetic(n, seed, options);
  bam::SaveDatasetDir(ds, out);
  std::cout << "wrote " << ds.samples.size() << " samples to " << out << "\n";
  return 0;
}

int RunTrain(const std::string& config_path, const std::string& data,
             const std::string& out, const std::string& resume_path,
             bool verbose) {
  bam::Config config = bam::LoadConfig(config_path);
  bam::LoadOptions load;
  load.max_clips = config.max_clips;
  const bam::Dataset ds = bam::LoadDatasetDir(data, load);
  if (ds.samples.empty()) throw std::runtime_error("dataset is empty: " + data);

  bam::TrainOptions options;
  options.out_dir = out;
  options.verbose = verbose;
  bam::TrainResult result;
  if (!resume_path.empty()) {
    bam::LoadedCheckpoint ck = bam::LoadCheckpoint(resume_path);
    result = bam::Train(*ck.model, ds, options, &ck);
  } else {
    if (config.video_dim == 0) config.video_dim = ds.video_dim();
    if (config.text_dim == 0) config.text_dim = ds.text_dim();
    config.Validate();
    bam::Model model(config, config.video_dim, config.text_dim);
    result = bam::Train(model, ds, options);
  }
  std::cout << "trained " << result.steps << " steps; best mAP_avg "
            << result.best_map << " (epoch " << result.best_epoch << ")\n";
  std::cout << "checkpoints: " << (fs::path(out) / "best.ckpt").string()
            << ", " << (fs::path(out) / "last.ckpt").string() << "\n";
  return 0;
}

int RunEval(const std::string& ckpt, const std::string& data,
            const std::string& out, std::string metrics_path) {
  bam::LoadedCheckpoint ck = bam::LoadCheckpoint(ckpt);
  bam::LoadOptions load;
  load.max_clips = ck.model->config().max_clips;
  const bam::Dataset ds = bam::LoadDatasetDir(data, load);
  const bam::Evaluation ev = bam::Evaluate(*ck.model, ds);
  bam::WritePredictions(out, ev.predictions);
  if (metrics_path.empty()) metrics_path = out + ".metrics.json";
  bam::WriteMetricsJson(metrics_path, ev.metrics);
  PrintMetrics(ev.metrics);
  return 0;
}

int RunAnalyze(const std::string& preds, const std::string& which,
               const std::string& out) {
  const auto records = bam::ToEvalRecords(bam::ReadPredictions(preds));
  const bam::AnalysisReport report = bam::Analyze(records, which);
  if (report.skipped) {
    std::cout << report.message << "\n";
    return 0;
  }
  std::ofstream file(out);
  if (!file) throw std::runtime_error("cannot write " + out);
  file << report.csv;
  std::cout << report.csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bam: boundary-aware moment retrieval"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string synth_out;
  int synth_n = 32;
  uint64_t synth_seed = 0;
  bam::SyntheticOptions synth_opts;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n", synth_n, "Number of samples")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--min-clips", synth_opts.min_clips);
  synth->add_option("--max-clips", synth_opts.max_clips);
  synth->add_option("--min-moments", synth_opts.min_moments);
  synth->add_option("--max-moments", synth_opts.max_moments);
  synth->add_option("--noise", synth_opts.noise, "Feature noise level");
  synth->add_option("--dip", synth_opts.dip_probability,
                    "Probability of a weaker middle third per moment");
  synth->add_option("--video-dim", synth_opts.video_dim);
  synth->add_option("--text-dim", synth_opts.text_dim);

  auto* train = app.add_subcommand("train", "Train a model");
  std::string config_path, train_data, train_out, resume;
  bool verbose = false;
  train->add_option("--config", config_path, "Config file")->required();
  train->add_option("--data", train_data, "Dataset directory")->required();
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--resume", resume, "Checkpoint to resume from");
  train->add_flag("--verbose,-v", verbose, "Log every epoch to stderr");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  std::string ckpt, eval_data, eval_out, metrics_out;
  eval->add_option("--ckpt", ckpt, "Checkpoint file")->required();
  eval->add_option("--data", eval_data, "Dataset directory")->required();
  eval->add_option("--out", eval_out, "Prediction file (JSON lines)")->required();
  eval->add_option("--metrics", metrics_out,
                   "Metrics JSON (default: <out>.metrics.json)");

  auto* analyze = app.add_subcommand("analyze", "Analyze a prediction file");
  std::string preds, which, analyze_out;
  analyze->add_option("--preds", preds, "Prediction file")->required();
  analyze->add_option("--which", which, "Analysis")
      ->required()
      ->check(CLI::IsMember({"hit_rate", "center_bins", "offsets",
                             "correlation"}));
  analyze->add_option("--out", analyze_out, "Report CSV")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*synth) return RunSynth(synth_out, synth_n, synth_seed, synth_opts);
    if (*train) {
      return RunTrain(config_path, train_data, train_out, resume, verbose);
    }
    if (*eval) return RunEval(ckpt, eval_data, eval_out, metrics_out);
    if (*analyze) return RunAnalyze(preds, which, analyze_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
