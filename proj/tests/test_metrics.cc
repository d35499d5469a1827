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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "bam/analyze.h"
#include "bam/random.h"
#include "support/oracles.h"

namespace bam {
namespace {

EvalRecord Record(std::vector<MomentSpan> preds, std::vector<MomentSpan> gts) {
  EvalRecord r;
  double score = 1.0;
  for (const MomentSpan& p : preds) {
    r.ranked_preds.push_back({p, score});
    score -= 0.01;
  }
  r.gt_spans = std::move(gts);
  return r;
}

MomentSpan RandomSpan(Rng& rng) {
  const double a = rng.Uniform(), b = rng.Uniform();
  return {std::min(a, b), std::max(a, b)};
}

// Random record set; predictions are sometimes jittered copies of a GT so
// every threshold sees hits.
std::vector<EvalRecord> RandomRecords(Rng& rng, int count) {
  std::vector<EvalRecord> out;
  for (int i = 0; i < count; ++i) {
    EvalRecord r;
    const int n = rng.UniformInt(1, 3);
    for (int j = 0; j < n; ++j) r.gt_spans.push_back(RandomSpan(rng));
    const int m = rng.UniformInt(1, 10);
    std::vector<double> scores;
    for (int j = 0; j < m; ++j) scores.push_back(rng.Uniform());
    std::sort(scores.rbegin(), scores.rend());
    for (int j = 0; j < m; ++j) {
      MomentSpan s = RandomSpan(rng);
      if (rng.Uniform() < 0.5) {
        const MomentSpan& g = r.gt_spans[rng.UniformInt(0, n - 1)];
        const double js = 0.05 * (rng.Uniform() - 0.5), je = 0.05 * (rng.Uniform() - 0.5);
        s = {std::clamp(g.start + js, 0.0, 1.0), std::clamp(g.end + je, 0.0, 1.0)};
        if (s.start > s.end) std::swap(s.start, s.end);
      }
      r.ranked_preds.push_back({s, scores[j]});
    }
    out.push_back(std::move(r));
  }
  return out;
}

TEST(RecallAt1, Examples) {
  // Top-1 IoU 0.6: [0, 0.6] against [0, 1].
  const std::vector<EvalRecord> one = {Record({{0.0, 0.6}}, {{0.0, 1.0}})};
  EXPECT_EQ(RecallAt1(one, 0.5), 1.0);
  EXPECT_EQ(RecallAt1(one, 0.7), 0.0);
  const std::vector<EvalRecord> three = {Record({{0.0, 0.8}}, {{0.0, 1.0}}),
                                         Record({{0.0, 0.4}}, {{0.0, 1.0}}),
                                         Record({{0.0, 0.55}}, {{0.0, 1.0}})};
  EXPECT_NEAR(RecallAt1(three, 0.5), 2.0 / 3.0, 1e-15);
  EXPECT_THROW(RecallAt1(std::vector<EvalRecord>{}, 0.5), std::invalid_argument);
}

TEST(AveragePrecision, Examples) {
  EXPECT_EQ(AveragePrecision(Record({{0.2, 0.4}}, {{0.2, 0.4}}), 0.5), 1.0);
  // Ranked (hit, miss, hit) against two GTs.
  const EvalRecord r = Record({{0.0, 0.2}, {0.4, 0.5}, {0.7, 0.9}},
                              {{0.0, 0.2}, {0.7, 0.9}});
  EXPECT_NEAR(AveragePrecision(r, 0.5), 5.0 / 6.0, 1e-15);
  EXPECT_EQ(DefaultMapThresholds().size(), 10u);
  EXPECT_NEAR(DefaultMapThresholds().front(), 0.5, 1e-15);
  EXPECT_NEAR(DefaultMapThresholds().back(), 0.95, 1e-12);
}

TEST(AveragePrecision, EachGtClaimedOnce) {
  // Two copies of the same hit only count once against a single GT.
  const EvalRecord r = Record({{0.2, 0.4}, {0.2, 0.4}}, {{0.2, 0.4}});
  EXPECT_EQ(AveragePrecision(r, 0.5), 1.0);
  const EvalRecord r2 = Record({{0.2, 0.4}, {0.2, 0.4}}, {{0.2, 0.4}, {0.6, 0.8}});
  EXPECT_EQ(AveragePrecision(r2, 0.5), 0.5);
}

TEST(MeanIou, Examples) {
  EXPECT_EQ(MeanIou(std::vector<EvalRecord>{Record({{0.1, 0.3}}, {{0.1, 0.3}})}), 1.0);
  const std::vector<EvalRecord> two = {Record({{0.1, 0.3}}, {{0.1, 0.3}}),
                                       Record({{0.5, 0.6}}, {{0.1, 0.3}})};
  EXPECT_EQ(MeanIou(two), 0.5);
  const std::vector<EvalRecord> three = {Record({{0.0, 0.3}}, {{0.0, 1.0}}),
                                         Record({{0.0, 0.6}}, {{0.0, 1.0}}),
                                         Record({{0.0, 0.9}}, {{0.0, 1.0}})};
  EXPECT_NEAR(MeanIou(three), 0.6, 1e-15);
}

TEST(Metrics, MatchOraclesOnRandomRecordSets) {
  Rng rng(1);
  const std::vector<double> thresholds = DefaultMapThresholds();
  for (int set = 0; set < 200; ++set) {
    const auto records = RandomRecords(rng, rng.UniformInt(1, 8));
    const MapReport map = MeanAveragePrecision(records, thresholds);
    EXPECT_NEAR(map.average, testing::OracleMeanAp(records, thresholds), 1e-9);
    for (double t : {0.3, 0.5, 0.7}) {
      EXPECT_NEAR(RecallAt1(records, t), testing::OracleRecallAt1(records, t), 1e-9);
    }
    double prev = 2.0;
    for (double t = 0.05; t <= 1.0; t += 0.05) {
      const double r = RecallAt1(records, t);
      EXPECT_LE(r, prev);
      prev = r;
    }
    for (double ap : map.per_threshold) {
      EXPECT_GE(ap, 0.0);
      EXPECT_LE(ap, 1.0);
    }
  }
}

TEST(Metrics, PerfectPredictionsScoreOne) {
  Rng rng(2);
  std::vector<EvalRecord> records;
  for (int i = 0; i < 10; ++i) {
    EvalRecord r;
    r.gt_spans = {RandomSpan(rng), RandomSpan(rng)};
    r.ranked_preds = {{r.gt_spans[0], 0.9}, {r.gt_spans[1], 0.8}};
    records.push_back(r);
  }
  const MapReport map = MeanAveragePrecision(records, DefaultMapThresholds());
  for (double ap : map.per_threshold) EXPECT_EQ(ap, 1.0);
  EXPECT_EQ(RecallAt1(records, 0.7), 1.0);
  EXPECT_EQ(MeanIou(records), 1.0);
}

TEST(BoundaryHitRate, Examples) {
  const std::vector<EvalRecord> r = {Record({{0.22, 0.49}}, {{0.2, 0.5}})};
  EXPECT_EQ(BoundaryHitRate(r, 0.05), 1.0);
  EXPECT_EQ(BoundaryHitRate(r, 0.03), 0.0);
  const std::vector<EvalRecord> exact = {Record({{0.2, 0.5}}, {{0.2, 0.5}})};
  for (double w : {1e-9, 0.01, 1.0}) EXPECT_EQ(BoundaryHitRate(exact, w), 1.0);
  // Any (GT, prediction) pair may hit, not only top-1.
  const std::vector<EvalRecord> later = {
      Record({{0.6, 0.9}, {0.21, 0.5}}, {{0.7, 0.75}, {0.2, 0.5}})};
  EXPECT_EQ(BoundaryHitRate(later, 0.04), 1.0);
}

TEST(BoundaryHitRate, MonotoneInBandWidth) {
  Rng rng(3);
  for (int set = 0; set < 200; ++set) {
    const auto records = RandomRecords(rng, rng.UniformInt(1, 8));
    double prev = 0.0;
    for (double w = 0.005; w <= 1.0; w += 0.005) {
      const double h = BoundaryHitRate(records, w);
      EXPECT_GE(h, prev);
      prev = h;
    }
  }
}

TEST(CenterErrorDiagnostic, Binning) {
  const std::vector<double> edges = DefaultCenterBinEdges();
  ASSERT_EQ(edges.size(), 6u);
  EvalRecord a = Record({{0.1, 0.5}}, {{0.0, 1.0}});  // center 0.3, error 0.2
  EvalRecord b = Record({{0.4, 0.6}}, {{0.0, 1.0}});  // center 0.5, error 0
  EvalRecord c = Record({{0.7, 0.9}}, {{0.0, 0.5}});  // outside, excluded
  const std::vector<EvalRecord> records = {a, b, c};
  const CenterErrorReport rep = CenterErrorDiagnostic(records, edges);
  EXPECT_FALSE(rep.empty);
  EXPECT_FALSE(rep.used_anchors);
  EXPECT_EQ(rep.considered, 2);
  EXPECT_EQ(rep.bins[2].count, 1);
  EXPECT_NEAR(rep.bins[2].mean_iou, 0.4, 1e-12);
  EXPECT_EQ(rep.bins[0].count, 1);
  double total = 0.0;
  for (const CenterBin& bin : rep.bins) total += bin.proportion;
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(CenterErrorDiagnostic, UsesAnchorsWhenPresent) {
  EvalRecord r = Record({{0.4, 0.6}}, {{0.0, 1.0}});
  r.anchors = std::vector<double>{0.85};  // error 0.35
  const std::vector<EvalRecord> records = {r};
  const CenterErrorReport rep = CenterErrorDiagnostic(records, DefaultCenterBinEdges());
  EXPECT_TRUE(rep.used_anchors);
  EXPECT_EQ(rep.bins[3].count, 1);
  EXPECT_EQ(rep.bins[0].count, 0);
}

TEST(CenterErrorDiagnostic, ProportionsSumToOneOnRandomSets) {
  Rng rng(4);
  for (int set = 0; set < 100; ++set) {
    const auto records = RandomRecords(rng, 20);
    const CenterErrorReport rep = CenterErrorDiagnostic(records, DefaultCenterBinEdges());
    if (rep.empty) continue;
    double total = 0.0;
    for (const CenterBin& bin : rep.bins) total += bin.proportion;
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  const std::vector<EvalRecord> none = {Record({{0.7, 0.9}}, {{0.0, 0.5}})};
  EXPECT_TRUE(CenterErrorDiagnostic(none, DefaultCenterBinEdges()).empty);
}

TEST(OffsetHistogram, Examples) {
  const std::vector<double> edges = {0.0, 5.0, 10.0};
  EvalRecord r = Record({{0.1, 0.2}}, {{0.1, 0.2}});
  r.offsets = std::vector<double>{1, -1, 1, -1, 6};
  const Histogram h = OffsetHistogram(std::vector<EvalRecord>{r}, edges);
  ASSERT_FALSE(h.empty);
  ASSERT_EQ(h.mass.size(), 3u);
  EXPECT_NEAR(h.mass[0], 0.8, 1e-15);
  EXPECT_NEAR(h.mass[1], 0.2, 1e-15);
  EXPECT_EQ(h.mass[2], 0.0);

  r.offsets = std::vector<double>(7, 0.0);
  const Histogram z = OffsetHistogram(std::vector<EvalRecord>{r}, edges);
  EXPECT_EQ(z.mass[0], 1.0);

  r.offsets.reset();
  EXPECT_TRUE(OffsetHistogram(std::vector<EvalRecord>{r}, edges).empty);
}

TEST(ScoreIouCorrelation, Examples) {
  // Predictions against GT [0, 1] have IoU equal to their length.
  EvalRecord r;
  r.gt_spans = {{0.0, 1.0}};
  r.ranked_preds = {{{0.0, 0.9}, 0.9}, {{0.0, 0.5}, 0.5}, {{0.0, 0.2}, 0.2}};
  EXPECT_NEAR(*ScoreIouCorrelation(std::vector<EvalRecord>{r}), 1.0, 1e-12);
  r.ranked_preds = {{{0.0, 0.1}, 0.9}, {{0.0, 0.5}, 0.5}, {{0.0, 0.8}, 0.2}};
  EXPECT_NEAR(*ScoreIouCorrelation(std::vector<EvalRecord>{r}), -1.0, 1e-12);
  // {(score, IoU)} = {(0,0), (0.5,1), (1,0.5)}: r = 0.5.
  r.ranked_preds = {{{0.0, 0.5}, 1.0}, {{0.0, 1.0}, 0.5}, {{0.5, 0.5}, 0.0}};
  EXPECT_NEAR(*ScoreIouCorrelation(std::vector<EvalRecord>{r}), 0.5, 1e-12);
  r.ranked_preds = {{{0.0, 0.5}, 0.3}, {{0.0, 1.0}, 0.3}};
  EXPECT_FALSE(ScoreIouCorrelation(std::vector<EvalRecord>{r}).has_value());
}

TEST(Analyze, HitRateSeriesIsMonotone) {
  Rng rng(5);
  auto records = RandomRecords(rng, 30);
  for (EvalRecord& r : records) {
    for (auto& p : r.ranked_preds) p.span = {p.span.start * 60, p.span.end * 60};
    for (auto& g : r.gt_spans) g = {g.start * 60, g.end * 60};
    r.duration = 60;
  }
  const AnalysisReport rep = Analyze(records, "hit_rate");
  ASSERT_FALSE(rep.skipped);
  std::istringstream in(rep.csv);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  double prev = -1.0;
  while (std::getline(in, line)) {
    const double v = std::stod(line.substr(line.find(',') + 1));
    EXPECT_GE(v, prev);
    prev = v;
    ++rows;
  }
  EXPECT_EQ(rows, 10);
}

TEST(Analyze, SkipsAndRejects) {
  const std::vector<EvalRecord> records = {Record({{0.1, 0.2}}, {{0.1, 0.2}})};
  const AnalysisReport off = Analyze(records, "offsets");
  EXPECT_TRUE(off.skipped);
  EXPECT_NE(off.message.find("offsets"), std::string::npos);
  EXPECT_TRUE(Analyze(records, "correlation").skipped);
  EXPECT_THROW(Analyze(records, "bogus"), std::invalid_argument);
}

}  // namespace
}  // namespace bam
