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

#ifndef BAM_METRICS_H_
#define BAM_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bam/intervals.h"

namespace bam {

struct ScoredSpan {
  MomentSpan span;
  double score = 0.0;
};

// Predictions for one sample, ranked by descending score. Times may be in
// seconds or normalized; IoU-based metrics are unit-free, the band width of
// BoundaryHitRate and the offset bin edges must use the same unit.
struct EvalRecord {
  std::string qid;
  double duration = 0.0;
  std::vector<ScoredSpan> ranked_preds;
  std::vector<MomentSpan> gt_spans;
  std::optional<std::vector<double>> anchors;  // parallel to ranked_preds
  std::optional<std::vector<double>> offsets;  // raw sampling offsets
};

// Max over GTs of IoU(span, gt).
double MaxIou(const MomentSpan& span, std::span<const MomentSpan> gt_spans);

// Fraction of records whose top-1 prediction reaches max-IoU >= threshold.
// Throws std::invalid_argument on an empty record set.
double RecallAt1(std::span<const EvalRecord> records, double iou_threshold);

// Interpolation-free AP of one record: predictions are walked in rank order,
// each claims the unclaimed GT with the highest IoU when that IoU reaches the
// threshold; AP = sum of precision at each claim / number of GTs.
double AveragePrecision(const EvalRecord& record, double iou_threshold);

struct MapReport {
  std::vector<double> thresholds;
  std::vector<double> per_threshold;  // mean AP over records
  double average = 0.0;               // mean over thresholds
};

// 0.5, 0.55, ..., 0.95
std::vector<double> DefaultMapThresholds();

MapReport MeanAveragePrecision(std::span<const EvalRecord> records,
                               std::span<const double> thresholds);

double MeanIou(std::span<const EvalRecord> records);

// Fraction of records with some (GT, prediction) pair whose start and end both
// lie within band_width / 2 of the GT's.
double BoundaryHitRate(std::span<const EvalRecord> records, double band_width);

struct CenterBin {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
  double mean_iou = 0.0;
  double proportion = 0.0;
};

struct CenterErrorReport {
  std::vector<CenterBin> bins;
  int considered = 0;
  bool used_anchors = false;
  bool empty = true;  // no qualifying record
};

// [0, .1), [.1, .2), ..., [.4, .5]
std::vector<double> DefaultCenterBinEdges();

// Groups top-1 predictions by |ref - gt_center| / gt_length, where ref is the
// anchor when the record carries anchors and the span center otherwise. Only
// predictions whose ref lies inside a GT are considered (the containing GT
// with the highest IoU is used). The last bin is closed on the right.
CenterErrorReport CenterErrorDiagnostic(std::span<const EvalRecord> records,
                                        std::span<const double> bin_edges);

struct Histogram {
  std::vector<double> edges;  // bin i = [edges[i], edges[i+1]), last open
  std::vector<double> mass;   // sums to 1 when !empty
  size_t samples = 0;
  bool empty = true;
};

// Normalized histogram of |offset| over every record that carries offsets.
Histogram OffsetHistogram(std::span<const EvalRecord> records,
                          std::span<const double> edges);

// Pearson r between every prediction score and its max-over-GT IoU; nullopt
// when either side has zero variance or fewer than two predictions exist.
std::optional<double> ScoreIouCorrelation(std::span<const EvalRecord> records);

}  // namespace bam

#endif  // BAM_METRICS_H_
