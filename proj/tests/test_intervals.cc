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

#include "bam/intervals.h"

#include <gtest/gtest.h>

#include "bam/random.h"
#include "support/oracles.h"

namespace bam {
namespace {

void ExpectSpan(const MomentSpan& s, double start, double end) {
  EXPECT_NEAR(s.start, start, 1e-12);
  EXPECT_NEAR(s.end, end, 1e-12);
}

TEST(TripletToSpan, Examples) {
  ExpectSpan(TripletToSpan({0.5, 0.2, 0.3}), 0.3, 0.8);
  ExpectSpan(TripletToSpan({0.5, 0.0, 0.0}), 0.5, 0.5);
  ExpectSpan(TripletToSpan({0.1, 0.3, 0.2}), 0.0, 0.3);
}

TEST(TripletToSpan, ClampsBothSides) {
  ExpectSpan(TripletToSpan({0.9, 0.1, 0.4}), 0.8, 1.0);
  ExpectSpan(TripletToSpan({0.5, 0.7, 0.7}), 0.0, 1.0);
}

TEST(TripletToSpan, AnchorOutsideRangeCollapses) {
  // Negative distances are outside the contract; an inverted result must
  // still collapse onto the clamped anchor.
  const MomentSpan s = TripletToSpan({1.2, -0.1, -0.1});
  EXPECT_EQ(s.start, s.end);
  EXPECT_EQ(s.start, 1.0);
}

TEST(CenterLengthToSpan, Examples) {
  ExpectSpan(CenterLengthToSpan({0.5, 0.4}), 0.3, 0.7);
  ExpectSpan(CenterLengthToSpan({0.5, 0.0}), 0.5, 0.5);
  ExpectSpan(CenterLengthToSpan({0.05, 0.2}), 0.0, 0.15);
}

TEST(Iou1d, Examples) {
  EXPECT_DOUBLE_EQ(Iou1d({0.2, 0.6}, {0.2, 0.6}), 1.0);
  EXPECT_DOUBLE_EQ(Iou1d({0.0, 0.2}, {0.4, 0.6}), 0.0);
  EXPECT_NEAR(Iou1d({0.0, 0.2}, {0.1, 0.3}), 1.0 / 3.0, 1e-12);
}

TEST(Iou1d, ZeroLengthUnion) {
  EXPECT_EQ(Iou1d({0.4, 0.4}, {0.4, 0.4}), 1.0);
  EXPECT_EQ(Iou1d({0.4, 0.4}, {0.5, 0.5}), 0.0);
}

TEST(Iou1d, PointInsideSpanIsZero) {
  EXPECT_EQ(Iou1d({0.3, 0.3}, {0.2, 0.6}), 0.0);
}

TEST(Iou1d, TouchingSpansAreZero) {
  EXPECT_EQ(Iou1d({0.0, 0.3}, {0.3, 0.6}), 0.0);
}

TEST(Giou1d, Examples) {
  EXPECT_DOUBLE_EQ(Giou1d({0.2, 0.6}, {0.2, 0.6}), 1.0);
  EXPECT_NEAR(Giou1d({0.0, 0.2}, {0.1, 0.3}), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(Giou1d({0.0, 0.1}, {0.2, 0.3}), -1.0 / 3.0, 1e-12);
}

TEST(Giou1d, ApproachesMinusOneForFarPoints) {
  EXPECT_NEAR(Giou1d({0.0, 1e-9}, {1.0 - 1e-9, 1.0}), -1.0, 1e-8);
}

TEST(L1SpanDistance, Examples) {
  EXPECT_EQ(L1SpanDistance({0.2, 0.5}, {0.2, 0.5}), 0.0);
  EXPECT_NEAR(L1SpanDistance({0.0, 0.5}, {0.1, 0.4}), 0.2, 1e-12);
  EXPECT_EQ(L1SpanDistance({0.0, 0.0}, {1.0, 1.0}), 2.0);
}

MomentSpan RandomSpan(Rng& rng) {
  double a = rng.Uniform(), b = rng.Uniform();
  if (a > b) std::swap(a, b);
  return {a, b};
}

TEST(Iou1d, Properties) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const MomentSpan a = RandomSpan(rng), b = RandomSpan(rng);
    const double iou = Iou1d(a, b);
    EXPECT_GE(iou, 0.0);
    EXPECT_LE(iou, 1.0);
    EXPECT_EQ(iou, Iou1d(b, a));
    EXPECT_EQ(Iou1d(a, a), 1.0);
    EXPECT_LE(Giou1d(a, b), iou + 1e-15);
    EXPECT_GE(Giou1d(a, b), -1.0);
  }
}

TEST(Giou1d, EqualsIouWhenHullIsUnion) {
  Rng rng(12);
  for (int i = 0; i < 500; ++i) {
    const MomentSpan a = RandomSpan(rng);
    const MomentSpan b{rng.Uniform(a.start, a.end), 1.0};
    EXPECT_NEAR(Giou1d(a, b), Iou1d(a, b), 1e-12);
  }
}

TEST(Geometry, MatchesIntervalOracle) {
  Rng rng(13);
  for (int i = 0; i < 10000; ++i) {
    const MomentSpan a = RandomSpan(rng), b = RandomSpan(rng);
    EXPECT_NEAR(Iou1d(a, b), testing::OracleIou(a, b), 1e-9);
    EXPECT_NEAR(Giou1d(a, b), testing::OracleGiou(a, b), 1e-9);
  }
}

TEST(TripletToSpan, SubsumesCenterLength) {
  Rng rng(14);
  for (int i = 0; i < 1000; ++i) {
    const double c = rng.Uniform(), l = rng.Uniform();
    EXPECT_EQ(TripletToSpan({c, l / 2, l / 2}), CenterLengthToSpan({c, l}));
  }
}

}  // namespace
}  // namespace bam
