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

#ifndef BAM_OPS_H_
#define BAM_OPS_H_

#include <span>
#include <vector>

#include "bam/autograd.h"

namespace bam {

class Rng;

// Differentiable primitives over Var. Shapes are checked and mismatches throw
// std::invalid_argument.

Var MatMul(const Var& a, const Var& b);
// a * b^T
Var MatMulNT(const Var& a, const Var& b);

Var Add(const Var& a, const Var& b);
Var Sub(const Var& a, const Var& b);
Var Mul(const Var& a, const Var& b);
Var Div(const Var& a, const Var& b);
Var Scale(const Var& a, double s);
Var AddScalar(const Var& a, double s);
Var Neg(const Var& a);

inline Var operator+(const Var& a, const Var& b) { return Add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return Sub(a, b); }
inline Var operator-(const Var& a) { return Neg(a); }

// a (N x C) + row (1 x C), broadcast over rows.
Var AddRow(const Var& a, const Var& row);
// a (N x C) * col (N x 1), broadcast over columns.
Var MulCol(const Var& a, const Var& col);
// col (N x 1) repeated into N x C.
Var BroadcastCol(const Var& col, Eigen::Index cols);

Var Relu(const Var& a);
Var Sigmoid(const Var& a);
// log(1 + exp(a)), computed stably.
Var Softplus(const Var& a);
Var Exp(const Var& a);
Var Log(const Var& a);
Var Abs(const Var& a);
// log(x / (1 - x)) with x clamped to [eps, 1 - eps]; zero gradient where the
// clamp is active.
Var InverseSigmoid(const Var& a, double eps = 1e-6);
Var Minimum(const Var& a, const Var& b);
Var Maximum(const Var& a, const Var& b);

Var SoftmaxRows(const Var& a);
// log(sum(exp(a))) over all elements; 1x1.
Var LogSumExp(const Var& a);

Var Sum(const Var& a);
Var Mean(const Var& a);
// Mean over columns: N x C -> N x 1.
Var RowMean(const Var& a);
// Maximum over columns: N x C -> N x 1 (gradient routed to the first argmax).
Var RowMax(const Var& a);

Var ConcatCols(std::span<const Var> parts);
Var ConcatCols(std::initializer_list<Var> parts);
Var ConcatRows(std::span<const Var> parts);
Var SliceCols(const Var& a, Eigen::Index start, Eigen::Index count);
Var GatherRows(const Var& a, std::span<const int> rows);
// out[i] = a[i + offset] when in range, zero otherwise.
Var ShiftRows(const Var& a, int offset);

// Linear interpolation of memory rows. positions is Q x 1 in normalized time;
// the fractional row coordinate is position * (N - 1), clamped to [0, N - 1].
Var InterpolateRows(const Var& memory, const Var& positions);

// Inverted dropout. Identity when rate == 0 or rng is null.
Var Dropout(const Var& a, double rate, Rng* rng);

// Copy of the value with no gradient path.
Var Detach(const Var& a);

}  // namespace bam

#endif  // BAM_OPS_H_
