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

#ifndef BAM_TRAINER_H_
#define BAM_TRAINER_H_

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bam/dataset.h"
#include "bam/metrics.h"
#include "bam/model.h"

namespace bam {

// Decoupled-weight-decay Adam over every parameter of a store.
class AdamW {
 public:
  struct Options {
    double lr = 1e-4;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  AdamW(ParameterStore& store, const Options& options);

  // Scales gradients so their global L2 norm is at most `max_norm`
  // (disabled when max_norm <= 0). Returns the norm before clipping.
  double ClipGradNorm(double max_norm);
  void Step();

  int64_t step() const { return step_; }
  double lr() const { return options_.lr; }
  void set_lr(double lr) { options_.lr = lr; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }
  void SetState(int64_t step, std::vector<Matrix> m, std::vector<Matrix> v);

 private:
  std::vector<Parameter*> params_;
  Options options_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  int64_t step_ = 0;
};

// One sample's entry of a prediction file. Times are in seconds.
struct PredictionRecord {
  std::string qid;
  double duration = 0.0;
  std::vector<std::array<double, 3>> windows;  // [start, end, score], ranked
  std::vector<MomentSpan> gt_windows;
  std::optional<std::vector<double>> anchors;
  std::optional<std::vector<double>> offsets;
};

void WritePredictions(const std::string& path,
                      const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> ReadPredictions(const std::string& path);

// Converts to metric records in seconds.
std::vector<EvalRecord> ToEvalRecords(
    const std::vector<PredictionRecord>& records);

struct Evaluation {
  std::map<std::string, double> metrics;  // R1@0.3 ... mIoU
  std::vector<PredictionRecord> predictions;
  std::vector<EvalRecord> records;  // normalized time
};

std::map<std::string, double> SummaryMetrics(
    const std::vector<EvalRecord>& records);

Evaluation Evaluate(const Model& model, const Dataset& dataset);

void WriteMetricsJson(const std::string& path,
                      const std::map<std::string, double>& metrics);

// Parameter blob "BAMC" plus <path>.json manifest (format version, config
// echo, optimizer progress).
struct TrainProgress {
  int64_t step = 0;
  int epoch = 0;       // epoch the next step belongs to
  int batch = 0;       // index of the next batch inside that epoch
  double best_map = -1.0;
};

void SaveCheckpoint(const std::string& path, const Model& model,
                    const AdamW* optimizer, const TrainProgress& progress);

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  int64_t optimizer_step = 0;
  std::vector<Matrix> first_moments;  // empty when not stored
  std::vector<Matrix> second_moments;
  TrainProgress progress;
};

LoadedCheckpoint LoadCheckpoint(const std::string& path);

inline constexpr int kCheckpointFormatVersion = 1;

struct EpochLog {
  int epoch = 0;
  int64_t step = 0;
  double loss = 0.0;
  double loc = 0.0;
  double qual = 0.0;
  double sal = 0.0;
  double regul = 0.0;
  std::map<std::string, double> metrics;  // empty when not evaluated
};

struct TrainOptions {
  std::string out_dir;  // empty: no files written
  bool verbose = false;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> history;
  double best_map = -1.0;
  int best_epoch = -1;
  int64_t steps = 0;
};

// Runs the training loop on `model`. With `resume`, continues from the
// stored progress and optimizer state.
TrainResult Train(Model& model, const Dataset& dataset,
                  const TrainOptions& options,
                  const LoadedCheckpoint* resume = nullptr);

}  // namespace bam

#endif  // BAM_TRAINER_H_
