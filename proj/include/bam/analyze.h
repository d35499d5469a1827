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

#ifndef BAM_ANALYZE_H_
#define BAM_ANALYZE_H_

#include <string>
#include <vector>

#include "bam/metrics.h"

namespace bam {

struct AnalysisOptions {
  std::vector<double> band_widths_sec = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> center_bin_edges = DefaultCenterBinEdges();
  std::vector<double> offset_edges_sec = {0.0, 5.0, 10.0};
};

struct AnalysisReport {
  std::string csv;      // header plus one row per series point
  bool skipped = false;
  std::string message;  // reason when skipped
};

// `which` is one of hit_rate, center_bins, offsets, correlation. Records are
// in seconds, as read from a prediction file.
AnalysisReport Analyze(const std::vector<EvalRecord>& records,
                       const std::string& which,
                       const AnalysisOptions& options = {});

}  // namespace bam

#endif  // BAM_ANALYZE_H_
