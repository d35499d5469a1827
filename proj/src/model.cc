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

#include "bam/model.h"

#include <stdexcept>

#include "bam/ops.h"

namespace bam {
namespace {

EncoderOptions MakeEncoderOptions(const Config& c, int video_dim,
                                  int text_dim) {
  EncoderOptions o;
  o.video_dim = video_dim;
  o.text_dim = text_dim;
  o.model_dim = c.D;
  o.heads = c.heads;
  o.layers = c.L_E;
  o.ffn_hidden = c.ffn_mult * c.D;
  return o;
}

DecoderOptions MakeDecoderOptions(const Config& c) {
  DecoderOptions o;
  o.model_dim = c.D;
  o.heads = c.heads;
  o.queries = c.M;
  o.sample_points = c.K;
  o.layers = c.L_D;
  o.ffn_hidden = c.ffn_mult * c.D;
  return o;
}

}  // namespace

Model::Model(const Config& config, int video_dim, int text_dim)
    : config_(config),
      init_rng_(Rng::Derive(config.seed, {0x1417})),
      encoder_(params_, MakeEncoderOptions(config, video_dim, text_dim),
               init_rng_),
      decoder_(params_, MakeDecoderOptions(config), init_rng_),
      quality_(params_, config.D, init_rng_) {
  config_.video_dim = video_dim;
  config_.text_dim = text_dim;
}

ObjectiveOptions Model::objective_options() const {
  ObjectiveOptions o;
  o.weights.l1 = config_.lambda_l1;
  o.weights.iou = config_.lambda_iou;
  o.weights.qual = config_.lambda_qual;
  o.weights.sal = config_.lambda_sal;
  o.weights.sal_unlabeled = config_.lambda_sal_unlabeled;
  o.weights.regul = config_.lambda_regul;
  o.deep_supervision = config_.deep_supervision;
  o.detach_quality_target = config_.detach_quality_target;
  return o;
}

SampleForward Model::Forward(const ForwardContext& ctx, const Sample& sample,
                             std::optional<DecoderState> initial) const {
  SampleForward out;
  out.memory = encoder_.Encode(ctx, sample.video_feats, sample.text_feats);
  out.saliency_scores = encoder_.SaliencyScores(ctx, out.memory.memory);
  out.locality = decoder_.BuildLocalityMemory(ctx, out.memory);
  out.decode = initial ? decoder_.Decode(ctx, out.memory, out.locality,
                                         std::move(*initial))
                       : decoder_.Decode(ctx, out.memory, out.locality);
  if (out.decode.layers.empty()) {
    const DecoderState& s = out.decode.initial;
    out.qualities.push_back(
        quality_(ctx, s.anchor_queries, s.start_queries, s.end_queries));
  } else {
    for (const DecoderState& s : out.decode.layers) {
      out.qualities.push_back(
          quality_(ctx, s.anchor_queries, s.start_queries, s.end_queries));
    }
  }
  return out;
}

TotalLoss Model::Loss(const ForwardContext& ctx, const Sample& sample,
                      const Sample* negative, Rng& pair_rng) const {
  SampleForward fwd = Forward(ctx, sample);
  const std::vector<bool> inside =
      InsideMask(sample.gt_spans, fwd.memory.clip_positions);

  ForwardOutputs outputs;
  outputs.decode = &fwd.decode;
  outputs.qualities = fwd.qualities;
  outputs.locality = &fwd.locality;

  std::vector<SaliencyPair> pairs;
  if (auto p = SampleSaliencyPair(sample.saliency_labels, inside, pair_rng)) {
    pairs.push_back(*p);
  }
  outputs.saliency.margin =
      MarginSaliencyLoss(fwd.saliency_scores, pairs, config_.alpha);
  if (sample.saliency_labels) {
    const auto refs = ContrastiveReferences(*sample.saliency_labels, inside);
    outputs.saliency.contrastive = RankContrastiveLoss(
        fwd.saliency_scores, *sample.saliency_labels, refs, config_.tau);
  } else {
    outputs.saliency.contrastive = {ctx.graph.Constant(0.0), true};
  }
  if (negative != nullptr) {
    MemoryBank neg = encoder_.Encode(ctx, sample.video_feats,
                                     negative->text_feats);
    outputs.saliency.negative =
        NegativeRelationLoss(encoder_.SaliencyScores(ctx, neg.memory));
  } else {
    outputs.saliency.negative = {ctx.graph.Constant(0.0), true};
  }
  return ComputeTotalLoss(outputs, sample, fwd.memory.clip_positions,
                          objective_options());
}

SamplePrediction Model::Predict(const Sample& sample) const {
  Graph g(false);
  ForwardContext ctx{g, false, 0.0, nullptr};
  SampleForward fwd = Forward(ctx, sample);
  const DecoderState& final_state = fwd.decode.Final();
  const std::vector<MomentSpan> spans = final_state.Spans();
  const Matrix& q = fwd.qualities.back().value();
  std::vector<double> scores(q.data(), q.data() + q.rows());

  SamplePrediction pred;
  pred.ranked = RankProposals(spans, scores);
  for (const RankedProposal& r : pred.ranked) {
    pred.anchors.push_back(final_state.anchor.value()(r.query, 0));
  }
  for (const DecoderState& s : fwd.decode.layers) {
    for (const Matrix* m : {&s.start_offsets, &s.end_offsets}) {
      pred.offsets.insert(pred.offsets.end(), m->data(), m->data() + m->size());
    }
  }
  return pred;
}

}  // namespace bam
