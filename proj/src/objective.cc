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

#include "bam/objective.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bam/ops.h"

namespace bam {
namespace {

// Kuhn-Munkres with row/column potentials. Returns the column of each row.
std::vector<int> MinCostAssignment(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) col[p[j] - 1] = j - 1;
  }
  return col;
}

double AssignmentCost(const Matrix& a, const std::vector<int>& col) {
  double total = 0.0;
  for (size_t i = 0; i < col.size(); ++i) {
    total += a(static_cast<Eigen::Index>(i), col[i]);
  }
  return total;
}

// Optimal cost of matching `rows` into `cols` (rows.size() <= cols.size()).
double SubproblemCost(const Matrix& a, const std::vector<int>& rows,
                      const std::vector<int>& cols) {
  if (rows.empty()) return 0.0;
  Matrix sub(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(cols.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < cols.size(); ++c) {
      sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          a(rows[r], cols[c]);
    }
  }
  return AssignmentCost(sub, MinCostAssignment(sub));
}

Var ConstantColumn(Graph& g, Eigen::Index rows, double value) {
  return g.Constant(Matrix::Constant(rows, 1, value));
}

}  // namespace

QualityHead::QualityHead(ParameterStore& store, int model_dim, Rng& init) {
  const int dims[] = {3 * model_dim, model_dim, 1};
  mlp_ = Mlp(store, "quality", dims, init);
}

Var QualityHead::operator()(const ForwardContext& ctx,
                            const Var& anchor_queries,
                            const Var& start_queries,
                            const Var& end_queries) const {
  return Sigmoid(mlp_(ctx.graph,
                      ConcatCols({anchor_queries, start_queries, end_queries})));
}

Var MaxIouColumn(const Var& starts, const Var& ends,
                 std::span<const MomentSpan> gt_spans) {
  Graph& g = *starts.graph();
  const Eigen::Index m = starts.rows();
  Var best;
  for (size_t n = 0; n < gt_spans.size(); ++n) {
    const MomentSpan& gt = gt_spans[n];
    Var gs = ConstantColumn(g, m, gt.start);
    Var ge = ConstantColumn(g, m, gt.end);
    Var inter = Relu(Minimum(ends, ge) - Maximum(starts, gs));
    Var uni = AddScalar(ends - starts, gt.length()) - inter;
    Var iou = Div(inter, uni);
    best = (n == 0) ? iou : Maximum(best, iou);
  }
  return best;
}

Var QualityLoss(const Var& quality, const Var& starts, const Var& ends,
                std::span<const MomentSpan> gt_spans, bool detach_target) {
  if (gt_spans.empty()) throw std::invalid_argument("quality loss needs GTs");
  Var target = MaxIouColumn(starts, ends, gt_spans);
  if (detach_target) target = Detach(target);
  return Sum(Abs(quality - target));
}

double PairCost(const MomentSpan& gt, const MomentSpan& pred,
                const LossWeights& weights) {
  return weights.l1 * L1SpanDistance(gt, pred) +
         weights.iou * (1.0 - Giou1d(gt, pred));
}

MatchResult SolveAssignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n > m) {
    throw std::invalid_argument("cannot match " + std::to_string(n) +
                                " ground truths to " + std::to_string(m) +
                                " predictions");
  }
  MatchResult result;
  if (n == 0) return result;
  const double optimum = AssignmentCost(cost, MinCostAssignment(cost));
  const double tol = 1e-10 * std::max(1.0, std::abs(optimum));

  // Fix rows in order, taking the smallest column that still admits an
  // optimal completion.
  std::vector<bool> used(m, false);
  double remaining = optimum;
  for (int i = 0; i < n; ++i) {
    std::vector<int> rows;
    for (int r = i + 1; r < n; ++r) rows.push_back(r);
    int chosen = -1;
    double chosen_rest = 0.0;
    for (int j = 0; j < m && chosen < 0; ++j) {
      if (used[j]) continue;
      std::vector<int> cols;
      for (int c = 0; c < m; ++c) {
        if (!used[c] && c != j) cols.push_back(c);
      }
      const double rest = SubproblemCost(cost, rows, cols);
      if (cost(i, j) + rest <= remaining + tol) {
        chosen = j;
        chosen_rest = rest;
      }
    }
    if (chosen < 0) throw std::logic_error("assignment refinement failed");
    used[chosen] = true;
    result.assignment.push_back(chosen);
    remaining = chosen_rest;
  }
  result.total_cost = AssignmentCost(cost, result.assignment);
  return result;
}

Matrix PairCostMatrix(std::span<const MomentSpan> gt_spans,
                      std::span<const MomentSpan> pred_spans,
                      const LossWeights& weights) {
  Matrix cost(static_cast<Eigen::Index>(gt_spans.size()),
              static_cast<Eigen::Index>(pred_spans.size()));
  for (size_t n = 0; n < gt_spans.size(); ++n) {
    for (size_t m = 0; m < pred_spans.size(); ++m) {
      cost(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) =
          PairCost(gt_spans[n], pred_spans[m], weights);
    }
  }
  return cost;
}

MatchResult HungarianMatch(std::span<const MomentSpan> gt_spans,
                           std::span<const MomentSpan> pred_spans,
                           const LossWeights& weights) {
  return SolveAssignment(PairCostMatrix(gt_spans, pred_spans, weights));
}

Var LocalizationLoss(const Var& starts, const Var& ends,
                     std::span<const MomentSpan> gt_spans,
                     const MatchResult& match, const LossWeights& weights) {
  Graph& g = *starts.graph();
  const Eigen::Index n = static_cast<Eigen::Index>(gt_spans.size());
  if (match.assignment.size() != gt_spans.size()) {
    throw std::invalid_argument("match does not cover every GT");
  }
  if (n == 0) return g.Constant(0.0);
  Var s = GatherRows(starts, match.assignment);
  Var e = GatherRows(ends, match.assignment);
  Matrix gs(n, 1), ge(n, 1), glen(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    gs(i, 0) = gt_spans[i].start;
    ge(i, 0) = gt_spans[i].end;
    glen(i, 0) = gt_spans[i].length();
  }
  Var gs_v = g.Constant(gs);
  Var ge_v = g.Constant(ge);
  Var l1 = Abs(s - gs_v) + Abs(e - ge_v);
  Var inter = Relu(Minimum(e, ge_v) - Maximum(s, gs_v));
  Var uni = (e - s) + g.Constant(glen) - inter;
  Var hull = Maximum(e, ge_v) - Minimum(s, gs_v);
  Var giou = Div(inter, uni) - Div(hull - uni, hull);
  Var cost = Scale(l1, weights.l1) +
             Scale(AddScalar(Neg(giou), 1.0), weights.iou);
  return Sum(cost);
}

LossBreakdown CombineLosses(double loc, double qual, double sal, double regul,
                            const LossWeights& weights,
                            bool saliency_labeled) {
  LossBreakdown b;
  b.loc = loc;
  b.qual = qual;
  b.sal = sal;
  b.regul = regul;
  b.sal_weight = saliency_labeled ? weights.sal : weights.sal_unlabeled;
  b.total = loc + weights.qual * qual + b.sal_weight * sal +
            weights.regul * regul;
  return b;
}

TotalLoss ComputeTotalLoss(const ForwardOutputs& outputs, const Sample& sample,
                           std::span<const double> clip_positions,
                           const ObjectiveOptions& options) {
  const DecodeResult& decode = *outputs.decode;
  const LocalityMemory& locality = *outputs.locality;
  Graph& g = *locality.start_activation.graph();
  const LossWeights& w = options.weights;

  std::vector<const DecoderState*> supervised;
  if (decode.layers.empty()) {
    supervised.push_back(&decode.initial);
  } else if (options.deep_supervision) {
    for (const DecoderState& s : decode.layers) supervised.push_back(&s);
  } else {
    supervised.push_back(&decode.layers.back());
  }
  if (outputs.qualities.size() != std::max<size_t>(decode.layers.size(), 1)) {
    throw std::invalid_argument("one quality column per decoder layer needed");
  }
  const size_t first_quality = outputs.qualities.size() - supervised.size();

  TotalLoss out;
  Var loc = g.Constant(0.0);
  Var qual = g.Constant(0.0);
  for (size_t i = 0; i < supervised.size(); ++i) {
    const DecoderState& state = *supervised[i];
    Var starts = state.StartTimes();
    Var ends = state.EndTimes();
    std::vector<MomentSpan> raw(static_cast<size_t>(state.num_queries()));
    for (size_t m = 0; m < raw.size(); ++m) {
      raw[m] = {starts.value()(static_cast<Eigen::Index>(m), 0),
                ends.value()(static_cast<Eigen::Index>(m), 0)};
    }
    MatchResult match = HungarianMatch(sample.gt_spans, raw, w);
    loc = loc + LocalizationLoss(starts, ends, sample.gt_spans, match, w);
    qual = qual + QualityLoss(outputs.qualities[first_quality + i], starts,
                              ends, sample.gt_spans,
                              options.detach_quality_target);
    out.matches.push_back(std::move(match));
  }

  const SaliencyTerms& st = outputs.saliency;
  Var sal = st.margin.value + st.contrastive.value + st.negative.value;
  Var regul = BoundaryRegularizationLoss(
      locality.start_activation, locality.end_activation,
      MakeBoundaryLabels(sample.gt_spans, clip_positions));

  const bool labeled = sample.saliency_labels.has_value();
  out.breakdown = CombineLosses(loc.scalar(), qual.scalar(), sal.scalar(),
                                regul.scalar(), w, labeled);
  out.breakdown.margin = st.margin.value.scalar();
  out.breakdown.contrastive = st.contrastive.value.scalar();
  out.breakdown.negative = st.negative.value.scalar();
  out.breakdown.margin_skipped = st.margin.skipped;
  out.breakdown.contrastive_skipped = st.contrastive.skipped;
  out.breakdown.negative_skipped = st.negative.skipped;
  out.total = loc + Scale(qual, w.qual) + Scale(sal, out.breakdown.sal_weight) +
              Scale(regul, w.regul);
  return out;
}

std::vector<RankedProposal> RankProposals(std::span<const MomentSpan> spans,
                                          std::span<const double> scores) {
  if (spans.size() != scores.size()) {
    throw std::invalid_argument("spans and scores differ in length");
  }
  std::vector<RankedProposal> out;
  out.reserve(spans.size());
  for (size_t i = 0; i < spans.size(); ++i) {
    out.push_back({spans[i], scores[i], static_cast<int>(i)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedProposal& a, const RankedProposal& b) {
                     return a.score > b.score;
                   });
  return out;
}

}  // namespace bam
