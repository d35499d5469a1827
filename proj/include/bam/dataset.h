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

#ifndef BAM_DATASET_H_
#define BAM_DATASET_H_

#include <string>
#include <vector>

#include "bam/autograd.h"
#include "bam/encoder.h"

namespace bam {

struct Dataset {
  std::string name;
  std::string split;
  std::string units = "seconds";  // unit of annotation windows
  std::vector<Sample> samples;

  int video_dim() const;
  int text_dim() const;
  // Every sample validates and feature widths agree across samples.
  void Validate() const;
};

// Feature files: "BAMF", u32 rows, u32 cols, rows * cols float32, all
// little-endian, row-major.
void WriteFeatureFile(const std::string& path, const Matrix& features);
Matrix ReadFeatureFile(const std::string& path);

struct LoadOptions {
  int max_clips = 0;  // uniformly subsample longer videos; 0 keeps all clips
};

// Reads an annotation JSON-lines file (qid, vid, duration, relevant_windows,
// optional saliency_scores) with features at
//   <features_dir>/video/<vid>.bamf and <features_dir>/text/<qid>.bamf.
// Windows are converted from seconds to normalized time; ends past the
// duration are clamped with a warning on stderr.
Dataset LoadDataset(const std::string& annotations_path,
                    const std::string& features_dir,
                    const LoadOptions& options = {});

// Loads <dir>/annotations.jsonl with <dir>/features, plus manifest.json when
// present.
Dataset LoadDatasetDir(const std::string& dir, const LoadOptions& options = {});

// Writes the layout read by LoadDatasetDir.
void SaveDatasetDir(const Dataset& dataset, const std::string& dir);

// Uniform index selection of `count` out of `total` (first and last kept).
std::vector<int> UniformSubsample(int total, int count);

}  // namespace bam

#endif  // BAM_DATASET_H_
