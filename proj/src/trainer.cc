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

#include "bam/trainer.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bam/ops.h"
#include "json.hpp"

namespace bam {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr char kCheckpointMagic[4] = {'B', 'A', 'M', 'C'};

void WriteU32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t ReadU32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error("checkpoint truncated");
  }
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

void WriteU64(std::ostream& out, uint64_t v) {
  WriteU32(out, static_cast<uint32_t>(v & 0xffffffffu));
  WriteU32(out, static_cast<uint32_t>(v >> 32));
}

uint64_t ReadU64(std::istream& in) {
  const uint64_t lo = ReadU32(in);
  const uint64_t hi = ReadU32(in);
  return lo | (hi << 32);
}

void WriteMatrix(std::ostream& out, const Matrix& m) {
  WriteU32(out, static_cast<uint32_t>(m.rows()));
  WriteU32(out, static_cast<uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    WriteU64(out, std::bit_cast<uint64_t>(m.data()[i]));
  }
}

Matrix ReadMatrix(std::istream& in) {
  const uint32_t rows = ReadU32(in);
  const uint32_t cols = ReadU32(in);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = std::bit_cast<double>(ReadU64(in));
  }
  return m;
}

std::string FormatDouble(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

std::vector<double> ScaleAll(std::vector<double> v, double s) {
  for (double& x : v) x *= s;
  return v;
}

void CheckFinite(const LossBreakdown& b, int64_t step, const std::string& qid) {
  const std::pair<const char*, double> terms[] = {
      {"L_loc", b.loc},         {"L_qual", b.qual},
      {"L_sal", b.sal},         {"L_regul", b.regul},
      {"L_margin", b.margin},   {"L_cont", b.contrastive},
      {"L_neg", b.negative},    {"L_total", b.total}};
  for (const auto& [name, value] : terms) {
    if (!std::isfinite(value)) {
      throw std::runtime_error(std::string("non-finite loss term ") + name +
                               " at step " + std::to_string(step) +
                               " (sample " + qid + ")");
    }
  }
}

void CheckDims(const Model& model, const Dataset& dataset) {
  const Config& c = model.config();
  if (dataset.samples.empty()) return;
  if (dataset.video_dim() != c.video_dim) {
    throw std::invalid_argument(
        "video feature dim mismatch: model expects " +
        std::to_string(c.video_dim) + ", dataset has " +
        std::to_string(dataset.video_dim()));
  }
  if (dataset.text_dim() != c.text_dim) {
    throw std::invalid_argument(
        "text feature dim mismatch: model expects " +
        std::to_string(c.text_dim) + ", dataset has " +
        std::to_string(dataset.text_dim()));
  }
}

}  // namespace

AdamW::AdamW(ParameterStore& store, const Options& options)
    : params_(store.All()), options_(options) {
  for (const Parameter* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

double AdamW::ClipGradNorm(double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params_) {
    if (p->grad.size() != 0) sq += p->grad.squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / (norm + 1e-6);
    for (Parameter* p : params_) {
      if (p->grad.size() != 0) p->grad *= s;
    }
  }
  return norm;
}

void AdamW::Step() {
  ++step_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    if (p.grad.size() == 0) continue;
    p.value *= 1.0 - options_.lr * options_.weight_decay;
    m_[i] = b1 * m_[i] + (1.0 - b1) * p.grad;
    v_[i] = b2 * v_[i] + (1.0 - b2) * p.grad.cwiseProduct(p.grad);
    const double step_size = options_.lr / c1;
    const double sqrt_c2 = std::sqrt(c2);
    p.value.array() -= step_size * m_[i].array() /
                       (v_[i].array().sqrt() / sqrt_c2 + options_.eps);
  }
}

void AdamW::SetState(int64_t step, std::vector<Matrix> m,
                     std::vector<Matrix> v) {
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw std::invalid_argument("optimizer state does not match parameters");
  }
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

void WritePredictions(const std::string& path,
                      const std::vector<PredictionRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write predictions " + path);
  for (const PredictionRecord& r : records) {
    json j;
    j["qid"] = r.qid;
    j["duration"] = r.duration;
    json windows = json::array();
    for (const auto& w : r.windows) windows.push_back({w[0], w[1], w[2]});
    j["pred_relevant_windows"] = windows;
    json gts = json::array();
    for (const MomentSpan& g : r.gt_windows) gts.push_back({g.start, g.end});
    j["relevant_windows"] = gts;
    if (r.anchors) j["anchors"] = *r.anchors;
    if (r.offsets) j["offsets"] = *r.offsets;
    out << j.dump() << "\n";
  }
}

std::vector<PredictionRecord> ReadPredictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open predictions " + path);
  std::vector<PredictionRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      PredictionRecord r;
      r.qid = j.at("qid").get<std::string>();
      r.duration = j.value("duration", 0.0);
      for (const auto& w : j.at("pred_relevant_windows")) {
        if (w.size() != 3) throw std::invalid_argument("window needs 3 values");
        r.windows.push_back({w[0].get<double>(), w[1].get<double>(),
                             w[2].get<double>()});
      }
      if (j.contains("relevant_windows")) {
        for (const auto& w : j["relevant_windows"]) {
          r.gt_windows.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
        }
      }
      if (j.contains("anchors")) {
        r.anchors = j["anchors"].get<std::vector<double>>();
      }
      if (j.contains("offsets")) {
        r.offsets = j["offsets"].get<std::vector<double>>();
      }
      records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return records;
}

std::vector<EvalRecord> ToEvalRecords(
    const std::vector<PredictionRecord>& records) {
  std::vector<EvalRecord> out;
  out.reserve(records.size());
  for (const PredictionRecord& r : records) {
    EvalRecord e;
    e.qid = r.qid;
    e.duration = r.duration;
    for (const auto& w : r.windows) e.ranked_preds.push_back({{w[0], w[1]}, w[2]});
    e.gt_spans = r.gt_windows;
    e.anchors = r.anchors;
    e.offsets = r.offsets;
    out.push_back(std::move(e));
  }
  return out;
}

std::map<std::string, double> SummaryMetrics(
    const std::vector<EvalRecord>& records) {
  std::map<std::string, double> m;
  m["R1@0.3"] = RecallAt1(records, 0.3);
  m["R1@0.5"] = RecallAt1(records, 0.5);
  m["R1@0.7"] = RecallAt1(records, 0.7);
  const std::vector<double> thresholds = DefaultMapThresholds();
  const MapReport report = MeanAveragePrecision(records, thresholds);
  m["mAP@0.5"] = report.per_threshold.at(0);
  m["mAP@0.75"] = report.per_threshold.at(5);
  m["mAP_avg"] = report.average;
  m["mIoU"] = MeanIou(records);
  return m;
}

Evaluation Evaluate(const Model& model, const Dataset& dataset) {
  CheckDims(model, dataset);
  Evaluation ev;
  for (const Sample& s : dataset.samples) {
    const SamplePrediction pred = model.Predict(s);
    const double dur = s.duration;

    EvalRecord rec;
    rec.qid = s.qid;
    rec.duration = dur;
    rec.gt_spans = s.gt_spans;
    for (const RankedProposal& p : pred.ranked) {
      rec.ranked_preds.push_back({p.span, p.score});
    }
    rec.anchors = pred.anchors;
    rec.offsets = pred.offsets;

    PredictionRecord out;
    out.qid = s.qid;
    out.duration = dur;
    for (const RankedProposal& p : pred.ranked) {
      out.windows.push_back({p.span.start * dur, p.span.end * dur, p.score});
    }
    for (const MomentSpan& g : s.gt_spans) {
      out.gt_windows.push_back({g.start * dur, g.end * dur});
    }
    out.anchors = ScaleAll(pred.anchors, dur);
    out.offsets = ScaleAll(pred.offsets, dur);

    ev.records.push_back(std::move(rec));
    ev.predictions.push_back(std::move(out));
  }
  ev.metrics = SummaryMetrics(ev.records);
  return ev;
}

void WriteMetricsJson(const std::string& path,
                      const std::map<std::string, double>& metrics) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics " + path);
  json j = metrics;
  out << j.dump(2) << "\n";
}

void SaveCheckpoint(const std::string& path, const Model& model,
                    const AdamW* optimizer, const TrainProgress& progress) {
  const auto params = model.params().All();
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path);
    out.write(kCheckpointMagic, 4);
    WriteU32(out, kCheckpointFormatVersion);
    WriteU32(out, static_cast<uint32_t>(params.size()));
    for (const Parameter* p : params) {
      WriteU32(out, static_cast<uint32_t>(p->name.size()));
      out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
      WriteMatrix(out, p->value);
    }
    WriteU32(out, optimizer != nullptr ? 1u : 0u);
    if (optimizer != nullptr) {
      WriteU64(out, static_cast<uint64_t>(optimizer->step()));
      for (size_t i = 0; i < params.size(); ++i) {
        WriteMatrix(out, optimizer->first_moments()[i]);
        WriteMatrix(out, optimizer->second_moments()[i]);
      }
    }
    if (!out) throw std::runtime_error("failed writing checkpoint " + path);
  }
  json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["config"] = model.config().ToMap();
  manifest["num_parameters"] = model.params().NumScalars();
  manifest["step"] = progress.step;
  manifest["epoch"] = progress.epoch;
  manifest["batch"] = progress.batch;
  manifest["best_map"] = FormatDouble(progress.best_map);
  std::ofstream out(path + ".json");
  if (!out) throw std::runtime_error("cannot write manifest " + path + ".json");
  out << manifest.dump(2) << "\n";
}

LoadedCheckpoint LoadCheckpoint(const std::string& path) {
  std::ifstream mf(path + ".json");
  if (!mf) throw std::runtime_error("missing checkpoint manifest " + path + ".json");
  json manifest;
  try {
    manifest = json::parse(mf);
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed manifest " + path + ".json: " + e.what());
  }
  if (manifest.value("format_version", -1) != kCheckpointFormatVersion) {
    throw std::runtime_error("unsupported checkpoint format in " + path);
  }
  Config config;
  for (const auto& [key, value] : manifest.at("config").items()) {
    SetConfigValue(config, key, value.get<std::string>());
  }
  config.Validate();

  LoadedCheckpoint ck;
  ck.model = std::make_unique<Model>(config, config.video_dim, config.text_dim);
  ck.progress.step = manifest.value("step", int64_t{0});
  ck.progress.epoch = manifest.value("epoch", 0);
  ck.progress.batch = manifest.value("batch", 0);
  ck.progress.best_map = std::stod(manifest.value("best_map", std::string("-1")));

  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  if (ReadU32(in) != kCheckpointFormatVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path);
  }
  auto params = ck.model->params().All();
  if (ReadU32(in) != params.size()) {
    throw std::runtime_error("checkpoint parameter count mismatch in " + path);
  }
  for (Parameter* p : params) {
    const uint32_t len = ReadU32(in);
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw std::runtime_error("checkpoint truncated");
    if (name != p->name) {
      throw std::runtime_error("checkpoint parameter '" + name +
                               "' where '" + p->name + "' was expected");
    }
    Matrix value = ReadMatrix(in);
    if (value.rows() != p->value.rows() || value.cols() != p->value.cols()) {
      throw std::runtime_error("checkpoint shape mismatch for " + name);
    }
    p->value = std::move(value);
  }
  if (ReadU32(in) == 1u) {
    ck.optimizer_step = static_cast<int64_t>(ReadU64(in));
    for (size_t i = 0; i < params.size(); ++i) {
      ck.first_moments.push_back(ReadMatrix(in));
      ck.second_moments.push_back(ReadMatrix(in));
    }
  }
  return ck;
}

TrainResult Train(Model& model, const Dataset& dataset,
                  const TrainOptions& options,
                  const LoadedCheckpoint* resume) {
  if (dataset.samples.empty()) {
    throw std::invalid_argument("train: dataset is empty");
  }
  CheckDims(model, dataset);
  const Config& config = model.config();
  const int n = static_cast<int>(dataset.samples.size());
  const int batch = std::min(config.batch, n);
  const int steps_per_epoch = (n + batch - 1) / batch;
  const int64_t total_steps =
      config.max_steps > 0
          ? config.max_steps
          : static_cast<int64_t>(config.epochs) * steps_per_epoch;

  AdamW optimizer(model.params(), {config.lr, config.weight_decay});
  TrainProgress progress;
  if (resume != nullptr) {
    progress = resume->progress;
    if (!resume->first_moments.empty()) {
      optimizer.SetState(resume->optimizer_step, resume->first_moments,
                         resume->second_moments);
    }
  }

  const bool write_files = !options.out_dir.empty();
  std::ofstream log;
  if (write_files) {
    fs::create_directories(options.out_dir);
    const fs::path log_path = fs::path(options.out_dir) / "log.csv";
    const bool append = resume != nullptr && fs::exists(log_path);
    log.open(log_path, append ? std::ios::app : std::ios::trunc);
    if (!append) {
      log << "epoch,step,loss,loc,qual,sal,regul,R1@0.3,R1@0.5,R1@0.7,"
             "mAP@0.5,mAP@0.75,mAP_avg,mIoU\n";
    }
  }
  const std::string best_path =
      write_files ? (fs::path(options.out_dir) / "best.ckpt").string() : "";
  const std::string last_path =
      write_files ? (fs::path(options.out_dir) / "last.ckpt").string() : "";

  TrainResult result;
  result.best_map = progress.best_map;
  bool saved_best = false;

  while (progress.step < total_steps) {
    const int epoch = progress.epoch;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = Rng::Derive(config.seed, {static_cast<uint64_t>(epoch), 3});
    for (int i = n - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle.UniformInt(0, i)]);
    }

    EpochLog row;
    row.epoch = epoch;
    int counted = 0;
    while (progress.batch < steps_per_epoch && progress.step < total_steps) {
      const int begin = progress.batch * batch;
      const int end = std::min(n, begin + batch);
      const int bs = end - begin;
      model.params().ZeroGrad();
      for (int k = 0; k < bs; ++k) {
        const int idx = order[begin + k];
        const Sample& sample = dataset.samples[idx];
        const Sample* negative =
            bs > 1 ? &dataset.samples[order[begin + (k + 1) % bs]] : nullptr;
        const auto step_key = static_cast<uint64_t>(progress.step);
        const auto idx_key = static_cast<uint64_t>(idx);
        Rng dropout_rng = Rng::Derive(config.seed, {step_key, idx_key, 1});
        Rng pair_rng = Rng::Derive(config.seed, {step_key, idx_key, 2});

        Graph graph(true);
        ForwardContext ctx{graph, true, config.dropout, &dropout_rng};
        const TotalLoss loss = model.Loss(ctx, sample, negative, pair_rng);
        CheckFinite(loss.breakdown, progress.step, sample.qid);
        graph.Backward(Scale(loss.total, 1.0 / bs));
        graph.ExportParameterGrads();

        row.loss += loss.breakdown.total;
        row.loc += loss.breakdown.loc;
        row.qual += loss.breakdown.qual;
        row.sal += loss.breakdown.sal;
        row.regul += loss.breakdown.regul;
        ++counted;
      }
      optimizer.set_lr(config.lr_drop_step > 0 && progress.step >= config.lr_drop_step
                           ? config.lr * config.lr_drop_factor
                           : config.lr);
      optimizer.ClipGradNorm(config.grad_clip);
      optimizer.Step();
      ++progress.step;
      ++progress.batch;
    }
    const bool epoch_done = progress.batch >= steps_per_epoch;
    if (epoch_done) {
      ++progress.epoch;
      progress.batch = 0;
    }
    const bool finished = progress.step >= total_steps;

    if (counted > 0) {
      row.loss /= counted;
      row.loc /= counted;
      row.qual /= counted;
      row.sal /= counted;
      row.regul /= counted;
    }
    row.step = progress.step;

    const bool evaluate =
        config.eval_every > 0 && (finished || (epoch_done && (epoch + 1) %
                                                             config.eval_every ==
                                                         0));
    if (evaluate) {
      row.metrics = Evaluate(model, dataset).metrics;
      const double map = row.metrics.at("mAP_avg");
      if (map > result.best_map) {
        result.best_map = map;
        result.best_epoch = epoch;
        progress.best_map = map;
        if (write_files) {
          SaveCheckpoint(best_path, model, &optimizer, progress);
          saved_best = true;
        }
      }
    }
    if (write_files) {
      log << row.epoch << "," << row.step << "," << FormatDouble(row.loss)
          << "," << FormatDouble(row.loc) << "," << FormatDouble(row.qual)
          << "," << FormatDouble(row.sal) << "," << FormatDouble(row.regul);
      for (const char* key : {"R1@0.3", "R1@0.5", "R1@0.7", "mAP@0.5",
                              "mAP@0.75", "mAP_avg", "mIoU"}) {
        log << ",";
        if (auto it = row.metrics.find(key); it != row.metrics.end()) {
          log << FormatDouble(it->second);
        }
      }
      log << "\n";
      log.flush();
      if (evaluate || finished) {
        SaveCheckpoint(last_path, model, &optimizer, progress);
      }
    }
    if (options.verbose) {
      std::cerr << "epoch " << row.epoch << " step " << row.step << " loss "
                << row.loss;
      if (!row.metrics.empty()) {
        std::cerr << " R1@0.7 " << row.metrics.at("R1@0.7") << " mAP_avg "
                  << row.metrics.at("mAP_avg");
      }
      std::cerr << "\n";
    }
    if (options.on_epoch) options.on_epoch(row);
    result.history.push_back(std::move(row));
  }
  if (write_files && !saved_best) {
    SaveCheckpoint(best_path, model, &optimizer, progress);
  }
  result.steps = progress.step;
  return result;
}

}  // namespace bam
