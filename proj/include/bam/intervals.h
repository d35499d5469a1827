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

#ifndef BAM_INTERVALS_H_
#define BAM_INTERVALS_H_

// 1D moment geometry. Times are normalized by video duration unless a caller
// explicitly works in seconds (the formulas are unit-agnostic except for the
// [0, 1] clamps in the conversions).

namespace bam {

// Closed interval [start, end] with start <= end.
struct MomentSpan {
  double start = 0.0;
  double end = 0.0;

  double length() const { return end - start; }
  double center() const { return 0.5 * (start + end); }
  bool operator==(const MomentSpan&) const = default;
};

// Boundary-oriented parametrization: an anchor point inside the moment and its
// distances to the two boundaries.
struct MomentTriplet {
  double anchor = 0.0;
  double start_distance = 0.0;
  double end_distance = 0.0;
};

// Symmetric (center, length) parametrization. Kept for diagnostics.
struct CenterLength {
  double center = 0.0;
  double length = 0.0;
};

// Returns (clamp(p - d_s), clamp(p + d_e)). A span that inverts after clamping
// collapses onto the anchor.
MomentSpan TripletToSpan(const MomentTriplet& triplet);

MomentSpan CenterLengthToSpan(const CenterLength& cl);

// Intersection over union. When the union has zero length the result is 1 for
// identical points and 0 otherwise.
double Iou1d(const MomentSpan& a, const MomentSpan& b);

// IoU minus the fraction of the hull not covered by the union.
double Giou1d(const MomentSpan& a, const MomentSpan& b);

double L1SpanDistance(const MomentSpan& a, const MomentSpan& b);

}  // namespace bam

#endif  // BAM_INTERVALS_H_
