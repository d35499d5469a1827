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

#include "bam/dataset.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace bam {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr char kMagic[4] = {'B', 'A', 'M', 'F'};

void PutU32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t GetU32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error(path + ": truncated header");
  }
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

int Dataset::video_dim() const {
  return samples.empty() ? 0 : static_cast<int>(samples[0].video_feats.cols());
}

int Dataset::text_dim() const {
  return samples.empty() ? 0 : static_cast<int>(samples[0].text_feats.cols());
}

void Dataset::Validate() const {
  std::set<std::string> qids;
  for (const Sample& s : samples) {
    s.Validate();
    if (s.video_feats.cols() != video_dim()) {
      throw std::invalid_argument("sample '" + s.qid + "': video width " +
                                  std::to_string(s.video_feats.cols()) +
                                  " differs from " +
                                  std::to_string(video_dim()));
    }
    if (s.text_feats.cols() != text_dim()) {
      throw std::invalid_argument("sample '" + s.qid + "': text width " +
                                  std::to_string(s.text_feats.cols()) +
                                  " differs from " +
                                  std::to_string(text_dim()));
    }
    if (!qids.insert(s.qid).second) {
      throw std::invalid_argument("duplicate qid '" + s.qid + "'");
    }
  }
}

void WriteFeatureFile(const std::string& path, const Matrix& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, 4);
  PutU32(out, static_cast<uint32_t>(features.rows()));
  PutU32(out, static_cast<uint32_t>(features.cols()));
  for (Eigen::Index i = 0; i < features.size(); ++i) {
    const float f = static_cast<float>(features.data()[i]);
    PutU32(out, std::bit_cast<uint32_t>(f));
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

Matrix ReadFeatureFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open feature file " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + ": bad magic (expected BAMF)");
  }
  const uint32_t rows = GetU32(in, path);
  const uint32_t cols = GetU32(in, path);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
      throw std::runtime_error(path + ": truncated payload");
    }
    const uint32_t u = static_cast<uint32_t>(b[0]) |
                       (static_cast<uint32_t>(b[1]) << 8) |
                       (static_cast<uint32_t>(b[2]) << 16) |
                       (static_cast<uint32_t>(b[3]) << 24);
    m.data()[i] = static_cast<double>(std::bit_cast<float>(u));
  }
  return m;
}

std::vector<int> UniformSubsample(int total, int count) {
  std::vector<int> idx;
  if (count <= 0 || total <= 0) return idx;
  if (count >= total) {
    for (int i = 0; i < total; ++i) idx.push_back(i);
    return idx;
  }
  if (count == 1) return {0};
  for (int i = 0; i < count; ++i) {
    idx.push_back(static_cast<int>(std::lround(
        static_cast<double>(i) * (total - 1) / static_cast<double>(count - 1))));
  }
  return idx;
}

Dataset LoadDataset(const std::string& annotations_path,
                    const std::string& features_dir,
                    const LoadOptions& options) {
  std::ifstream in(annotations_path);
  if (!in) throw std::runtime_error("cannot open " + annotations_path);
  Dataset ds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where =
        annotations_path + ":" + std::to_string(line_no) + ": ";
    Sample s;
    std::vector<std::vector<double>> windows;
    try {
      const json j = json::parse(line);
      s.qid = j.at("qid").is_string() ? j.at("qid").get<std::string>()
                                      : j.at("qid").dump();
      s.vid = j.at("vid").get<std::string>();
      s.duration = j.at("duration").get<double>();
      windows = j.at("relevant_windows").get<std::vector<std::vector<double>>>();
      if (j.contains("saliency_scores") && !j["saliency_scores"].is_null()) {
        s.saliency_labels = j["saliency_scores"].get<std::vector<double>>();
      }
    } catch (const json::exception& e) {
      throw std::runtime_error(where + "malformed annotation: " + e.what());
    }
    if (!(s.duration > 0.0)) {
      throw std::runtime_error(where + "duration must be positive");
    }
    for (const auto& w : windows) {
      if (w.size() != 2 || w[0] < 0.0 || w[1] < w[0]) {
        throw std::runtime_error(where + "bad relevant window");
      }
      double end = w[1];
      if (end > s.duration) {
        std::cerr << "warning: " << where << "window end " << end
                  << " exceeds duration " << s.duration << "; clamped\n";
        end = s.duration;
      }
      const double start = std::min(w[0], end);
      s.gt_spans.push_back({start / s.duration, end / s.duration});
    }

    const fs::path video_path = fs::path(features_dir) / "video" / (s.vid + ".bamf");
    const fs::path text_path = fs::path(features_dir) / "text" / (s.qid + ".bamf");
    if (!fs::exists(video_path)) {
      throw std::runtime_error("sample '" + s.qid +
                               "': missing video features " +
                               video_path.string());
    }
    if (!fs::exists(text_path)) {
      throw std::runtime_error("sample '" + s.qid +
                               "': missing text features " + text_path.string());
    }
    s.video_feats = ReadFeatureFile(video_path.string());
    s.text_feats = ReadFeatureFile(text_path.string());
    if (s.saliency_labels &&
        static_cast<Eigen::Index>(s.saliency_labels->size()) !=
            s.video_feats.rows()) {
      throw std::runtime_error(where + "saliency_scores has " +
                               std::to_string(s.saliency_labels->size()) +
                               " entries for " +
                               std::to_string(s.video_feats.rows()) + " clips");
    }
    if (options.max_clips > 0 && s.video_feats.rows() > options.max_clips) {
      const auto keep = UniformSubsample(static_cast<int>(s.video_feats.rows()),
                                         options.max_clips);
      Matrix v(static_cast<Eigen::Index>(keep.size()), s.video_feats.cols());
      std::vector<double> labels;
      for (size_t i = 0; i < keep.size(); ++i) {
        v.row(static_cast<Eigen::Index>(i)) = s.video_feats.row(keep[i]);
        if (s.saliency_labels) labels.push_back((*s.saliency_labels)[keep[i]]);
      }
      s.video_feats = std::move(v);
      if (s.saliency_labels) s.saliency_labels = std::move(labels);
    }
    try {
      s.Validate();
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(where + e.what());
    }
    ds.samples.push_back(std::move(s));
  }
  ds.Validate();
  return ds;
}

Dataset LoadDatasetDir(const std::string& dir, const LoadOptions& options) {
  const fs::path root(dir);
  Dataset ds = LoadDataset((root / "annotations.jsonl").string(),
                           (root / "features").string(), options);
  const fs::path manifest = root / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream in(manifest);
    const json j = json::parse(in);
    ds.name = j.value("name", "");
    ds.split = j.value("split", "");
    ds.units = j.value("units", "seconds");
  }
  return ds;
}

void SaveDatasetDir(const Dataset& dataset, const std::string& dir) {
  const fs::path root(dir);
  fs::create_directories(root / "features" / "video");
  fs::create_directories(root / "features" / "text");
  std::ofstream ann(root / "annotations.jsonl");
  if (!ann) throw std::runtime_error("cannot write annotations in " + dir);
  for (const Sample& s : dataset.samples) {
    json j;
    j["qid"] = s.qid;
    j["vid"] = s.vid;
    j["duration"] = s.duration;
    json windows = json::array();
    for (const MomentSpan& w : s.gt_spans) {
      windows.push_back({w.start * s.duration, w.end * s.duration});
    }
    j["relevant_windows"] = windows;
    if (s.saliency_labels) j["saliency_scores"] = *s.saliency_labels;
    ann << j.dump() << "\n";
    WriteFeatureFile((root / "features" / "video" / (s.vid + ".bamf")).string(),
                     s.video_feats);
    WriteFeatureFile((root / "features" / "text" / (s.qid + ".bamf")).string(),
                     s.text_feats);
  }
  json m;
  m["name"] = dataset.name;
  m["split"] = dataset.split;
  m["units"] = dataset.units;
  std::ofstream(root / "manifest.json") << m.dump(2) << "\n";
}

}  // namespace bam
