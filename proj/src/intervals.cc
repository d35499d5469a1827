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

#include <algorithm>
#include <cmath>

namespace bam {
namespace {

double Clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

MomentSpan ClampedSpan(double start, double end, double fallback) {
  const double s = Clamp01(start);
  const double e = Clamp01(end);
  if (s > e) {
    const double p = Clamp01(fallback);
    return {p, p};
  }
  return {s, e};
}

}  // namespace

MomentSpan TripletToSpan(const MomentTriplet& t) {
  return ClampedSpan(t.anchor - t.start_distance, t.anchor + t.end_distance,
                     t.anchor);
}

MomentSpan CenterLengthToSpan(const CenterLength& cl) {
  return ClampedSpan(cl.center - 0.5 * cl.length, cl.center + 0.5 * cl.length,
                     cl.center);
}

double Iou1d(const MomentSpan& a, const MomentSpan& b) {
  const double inter =
      std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = a.length() + b.length() - inter;
  if (uni <= 0.0) return (a == b) ? 1.0 : 0.0;
  return inter / uni;
}

double Giou1d(const MomentSpan& a, const MomentSpan& b) {
  const double inter =
      std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = a.length() + b.length() - inter;
  const double hull = std::max(a.end, b.end) - std::min(a.start, b.start);
  if (hull <= 0.0) return Iou1d(a, b);
  const double iou = uni > 0.0 ? inter / uni : 0.0;
  return iou - (hull - uni) / hull;
}

double L1SpanDistance(const MomentSpan& a, const MomentSpan& b) {
  return std::abs(a.start - b.start) + std::abs(a.end - b.end);
}

}  // namespace bam
