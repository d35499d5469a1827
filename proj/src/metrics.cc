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

#include "bam/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bam {
namespace {

void RequireRecords(std::span<const EvalRecord> records, const char* what) {
  if (records.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty record set");
  }
}

double TopIou(const EvalRecord& r) {
  if (r.ranked_preds.empty()) return 0.0;
  return MaxIou(r.ranked_preds.front().span, r.gt_spans);
}

}  // namespace

double MaxIou(const MomentSpan& span, std::span<const MomentSpan> gt_spans) {
  double best = 0.0;
  for (const MomentSpan& gt : gt_spans) best = std::max(best, Iou1d(span, gt));
  return best;
}

double RecallAt1(std::span<const EvalRecord> records, double iou_threshold) {
  RequireRecords(records, "RecallAt1");
  int hits = 0;
  for (const EvalRecord& r : records) {
    if (!r.ranked_preds.empty() && TopIou(r) >= iou_threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

double AveragePrecision(const EvalRecord& record, double iou_threshold) {
  if (record.gt_spans.empty()) return 0.0;
  std::vector<bool> claimed(record.gt_spans.size(), false);
  int tp = 0;
  double precision_sum = 0.0;
  for (size_t k = 0; k < record.ranked_preds.size(); ++k) {
    const MomentSpan& pred = record.ranked_preds[k].span;
    int best = -1;
    double best_iou = -1.0;
    for (size_t n = 0; n < record.gt_spans.size(); ++n) {
      if (claimed[n]) continue;
      const double iou = Iou1d(pred, record.gt_spans[n]);
      if (iou >= iou_threshold && iou > best_iou) {
        best = static_cast<int>(n);
        best_iou = iou;
      }
    }
    if (best < 0) continue;
    claimed[best] = true;
    ++tp;
    precision_sum += static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  return precision_sum / static_cast<double>(record.gt_spans.size());
}

std::vector<double> DefaultMapThresholds() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
  return t;
}

MapReport MeanAveragePrecision(std::span<const EvalRecord> records,
                               std::span<const double> thresholds) {
  RequireRecords(records, "MeanAveragePrecision");
  MapReport report;
  report.thresholds.assign(thresholds.begin(), thresholds.end());
  double sum = 0.0;
  for (double t : thresholds) {
    double ap = 0.0;
    for (const EvalRecord& r : records) ap += AveragePrecision(r, t);
    ap /= static_cast<double>(records.size());
    report.per_threshold.push_back(ap);
    sum += ap;
  }
  if (!thresholds.empty()) {
    report.average = sum / static_cast<double>(thresholds.size());
  }
  return report;
}

double MeanIou(std::span<const EvalRecord> records) {
  RequireRecords(records, "MeanIou");
  double sum = 0.0;
  for (const EvalRecord& r : records) sum += TopIou(r);
  return sum / static_cast<double>(records.size());
}

double BoundaryHitRate(std::span<const EvalRecord> records,
                       double band_width) {
  RequireRecords(records, "BoundaryHitRate");
  if (!(band_width > 0.0)) {
    throw std::invalid_argument("band width must be positive");
  }
  const double half = 0.5 * band_width;
  int hits = 0;
  for (const EvalRecord& r : records) {
    bool hit = false;
    for (const MomentSpan& gt : r.gt_spans) {
      for (const ScoredSpan& p : r.ranked_preds) {
        if (std::abs(p.span.start - gt.start) <= half &&
            std::abs(p.span.end - gt.end) <= half) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

std::vector<double> DefaultCenterBinEdges() {
  return {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
}

CenterErrorReport CenterErrorDiagnostic(std::span<const EvalRecord> records,
                                        std::span<const double> bin_edges) {
  if (bin_edges.size() < 2) {
    throw std::invalid_argument("center bins need at least two edges");
  }
  CenterErrorReport report;
  const size_t nbins = bin_edges.size() - 1;
  for (size_t b = 0; b < nbins; ++b) {
    report.bins.push_back({bin_edges[b], bin_edges[b + 1], 0, 0.0, 0.0});
  }
  std::vector<double> iou_sum(nbins, 0.0);
  for (const EvalRecord& r : records) {
    if (r.ranked_preds.empty()) continue;
    const MomentSpan& top = r.ranked_preds.front().span;
    double ref = top.center();
    if (r.anchors && !r.anchors->empty()) {
      ref = r.anchors->front();
      report.used_anchors = true;
    }
    const MomentSpan* gt = nullptr;
    double gt_iou = -1.0;
    for (const MomentSpan& g : r.gt_spans) {
      if (ref < g.start || ref > g.end || g.length() <= 0.0) continue;
      const double iou = Iou1d(top, g);
      if (iou > gt_iou) {
        gt = &g;
        gt_iou = iou;
      }
    }
    if (gt == nullptr) continue;
    const double err = std::abs(ref - gt->center()) / gt->length();
    for (size_t b = 0; b < nbins; ++b) {
      const bool last = b + 1 == nbins;
      if (err >= bin_edges[b] &&
          (err < bin_edges[b + 1] || (last && err <= bin_edges[b + 1]))) {
        ++report.bins[b].count;
        // The IoU reported is the top-1 max-over-GT IoU.
        iou_sum[b] += MaxIou(top, r.gt_spans);
        ++report.considered;
        break;
      }
    }
  }
  if (report.considered == 0) return report;
  report.empty = false;
  for (size_t b = 0; b < nbins; ++b) {
    CenterBin& bin = report.bins[b];
    bin.proportion = static_cast<double>(bin.count) / report.considered;
    bin.mean_iou = bin.count > 0 ? iou_sum[b] / bin.count : 0.0;
  }
  return report;
}

Histogram OffsetHistogram(std::span<const EvalRecord> records,
                          std::span<const double> edges) {
  if (edges.empty()) throw std::invalid_argument("histogram needs edges");
  Histogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.mass.assign(edges.size(), 0.0);
  for (const EvalRecord& r : records) {
    if (!r.offsets) continue;
    for (double o : *r.offsets) {
      const double a = std::abs(o);
      if (a < edges.front()) continue;
      // Bin i covers [edges[i], edges[i+1]); the last bin is open-ended.
      size_t b = static_cast<size_t>(
                     std::upper_bound(edges.begin(), edges.end(), a) -
                     edges.begin()) -
                 1;
      h.mass[b] += 1.0;
      ++h.samples;
    }
  }
  if (h.samples == 0) return h;
  h.empty = false;
  for (double& m : h.mass) m /= static_cast<double>(h.samples);
  return h;
}

std::optional<double> ScoreIouCorrelation(
    std::span<const EvalRecord> records) {
  std::vector<double> xs, ys;
  for (const EvalRecord& r : records) {
    for (const ScoredSpan& p : r.ranked_preds) {
      xs.push_back(p.score);
      ys.push_back(MaxIou(p.span, r.gt_spans));
    }
  }
  if (xs.size() < 2) return std::nullopt;
  const auto constant = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo == *hi;
  };
  if (constant(xs) || constant(ys)) return std::nullopt;
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace bam
