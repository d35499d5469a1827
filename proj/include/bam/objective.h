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

#ifndef BAM_OBJECTIVE_H_
#define BAM_OBJECTIVE_H_

#include <span>
#include <vector>

#include "bam/autograd.h"
#include "bam/decoder.h"
#include "bam/encoder.h"
#include "bam/intervals.h"
#include "bam/layers.h"

namespace bam {

struct LossWeights {
  double l1 = 10.0;
  double iou = 1.0;
  double qual = 2.0;
  double sal = 1.0;
  double sal_unlabeled = 4.0;  // used when a sample has no saliency labels
  double regul = 1.0;
};

// ---------------------------------------------------------------------------
// Quality-based scoring

// q = sigmoid(MLP([C_p || C_s || C_e])), one score per query (M x 1).
class QualityHead {
 public:
  QualityHead() = default;
  QualityHead(ParameterStore& store, int model_dim, Rng& init);

  Var operator()(const ForwardContext& ctx, const Var& anchor_queries,
                 const Var& start_queries, const Var& end_queries) const;
  const Mlp& mlp() const { return mlp_; }

 private:
  Mlp mlp_;
};

// Max-over-GT IoU of each prediction (M x 1) from unclamped start/end columns.
Var MaxIouColumn(const Var& starts, const Var& ends,
                 std::span<const MomentSpan> gt_spans);

// sum_m |q_m - max_n IoU(pred_m, gt_n)| over all M predictions. With
// `detach_target` the IoU target carries no gradient.
Var QualityLoss(const Var& quality, const Var& starts, const Var& ends,
                std::span<const MomentSpan> gt_spans, bool detach_target);

// ---------------------------------------------------------------------------
// Matching

// lambda_l1 * L1 + lambda_iou * (1 - gIoU). No classification term.
double PairCost(const MomentSpan& gt, const MomentSpan& pred,
                const LossWeights& weights);

struct MatchResult {
  // assignment[n] = prediction matched to GT n; injective.
  std::vector<int> assignment;
  // Sum of pairwise costs under `assignment`, accumulated in GT order.
  double total_cost = 0.0;
};

// Minimum-cost injective assignment of rows to columns of an N x M cost
// matrix (N <= M). Among optimal assignments, the lexicographically smallest
// (assignment[0], assignment[1], ...) is returned.
MatchResult SolveAssignment(const Matrix& cost);

Matrix PairCostMatrix(std::span<const MomentSpan> gt_spans,
                      std::span<const MomentSpan> pred_spans,
                      const LossWeights& weights);

// Throws std::invalid_argument when there are more GTs than predictions.
MatchResult HungarianMatch(std::span<const MomentSpan> gt_spans,
                           std::span<const MomentSpan> pred_spans,
                           const LossWeights& weights);

// Differentiable pair cost against a fixed GT for each matched prediction,
// summed over GTs.
Var LocalizationLoss(const Var& starts, const Var& ends,
                     std::span<const MomentSpan> gt_spans,
                     const MatchResult& match, const LossWeights& weights);

// ---------------------------------------------------------------------------
// Total objective

struct LossBreakdown {
  double loc = 0.0;
  double qual = 0.0;
  double sal = 0.0;
  double regul = 0.0;
  double total = 0.0;
  double sal_weight = 1.0;
  // Saliency components and whether each was inapplicable.
  double margin = 0.0;
  double contrastive = 0.0;
  double negative = 0.0;
  bool margin_skipped = false;
  bool contrastive_skipped = false;
  bool negative_skipped = false;
};

// total = loc + w.qual * qual + sal_weight * sal + w.regul * regul, where
// sal_weight is w.sal for labeled samples and w.sal_unlabeled otherwise.
LossBreakdown CombineLosses(double loc, double qual, double sal, double regul,
                            const LossWeights& weights, bool saliency_labeled);

struct SaliencyTerms {
  LossTerm margin;
  LossTerm contrastive;
  LossTerm negative;
};

struct ObjectiveOptions {
  LossWeights weights;
  bool deep_supervision = true;
  bool detach_quality_target = true;
};

// Everything the objective needs from one forward pass of one sample.
struct ForwardOutputs {
  const DecodeResult* decode = nullptr;
  // Quality scores for each entry of decode->layers (or the initial state when
  // there are no layers), M x 1 each.
  std::vector<Var> qualities;
  const LocalityMemory* locality = nullptr;
  SaliencyTerms saliency;
};

struct TotalLoss {
  Var total;
  LossBreakdown breakdown;
  std::vector<MatchResult> matches;  // one per supervised layer
};

TotalLoss ComputeTotalLoss(const ForwardOutputs& outputs, const Sample& sample,
                           std::span<const double> clip_positions,
                           const ObjectiveOptions& options);

// ---------------------------------------------------------------------------
// Ranking

struct RankedProposal {
  MomentSpan span;
  double score = 0.0;
  int query = 0;
};

// Descending by score; ties keep query order.
std::vector<RankedProposal> RankProposals(std::span<const MomentSpan> spans,
                                          std::span<const double> scores);

}  // namespace bam

#endif  // BAM_OBJECTIVE_H_
