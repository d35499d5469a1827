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

#include "bam/analyze.h"

#include <sstream>
#include <stdexcept>

namespace bam {
namespace {

std::string Num(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

AnalysisReport Skip(std::string message) {
  AnalysisReport r;
  r.skipped = true;
  r.message = std::move(message);
  return r;
}

}  // namespace

AnalysisReport Analyze(const std::vector<EvalRecord>& records,
                       const std::string& which,
                       const AnalysisOptions& options) {
  std::ostringstream csv;
  if (which == "hit_rate") {
    if (records.empty()) return Skip("hit_rate skipped: no records");
    csv << "band_width_sec,hit_rate\n";
    for (double w : options.band_widths_sec) {
      csv << Num(w) << "," << Num(BoundaryHitRate(records, w)) << "\n";
    }
  } else if (which == "center_bins") {
    const CenterErrorReport rep =
        CenterErrorDiagnostic(records, options.center_bin_edges);
    if (rep.empty) {
      return Skip("center_bins skipped: no top-1 reference point inside a GT");
    }
    csv << "bin_lo,bin_hi,count,proportion,mean_iou,reference\n";
    for (const CenterBin& b : rep.bins) {
      csv << Num(b.lo) << "," << Num(b.hi) << "," << b.count << ","
          << Num(b.proportion) << "," << Num(b.mean_iou) << ","
          << (rep.used_anchors ? "anchor" : "center") << "\n";
    }
  } else if (which == "offsets") {
    const Histogram h = OffsetHistogram(records, options.offset_edges_sec);
    if (h.empty) {
      return Skip("offsets skipped: prediction file carries no offsets");
    }
    csv << "bin_lo,bin_hi,mass\n";
    for (size_t i = 0; i < h.mass.size(); ++i) {
      const bool last = i + 1 >= h.edges.size();
      csv << Num(h.edges[i]) << "," << (last ? "inf" : Num(h.edges[i + 1]))
          << "," << Num(h.mass[i]) << "\n";
    }
  } else if (which == "correlation") {
    const auto r = ScoreIouCorrelation(records);
    if (!r) {
      return Skip("correlation skipped: scores or IoUs have zero variance");
    }
    csv << "pearson_r\n" << Num(*r) << "\n";
  } else {
    throw std::invalid_argument("unknown analysis '" + which +
                                "' (hit_rate, center_bins, offsets, "
                                "correlation)");
  }
  AnalysisReport out;
  out.csv = csv.str();
  return out;
}

}  // namespace bam
