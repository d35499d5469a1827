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

#include "bam/encoder.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bam/ops.h"

namespace bam {

void Sample::Validate() const {
  const std::string who = "sample '" + qid + "': ";
  if (video_feats.rows() < 1) {
    throw std::invalid_argument(who + "video features have no clips");
  }
  if (text_feats.rows() < 1) {
    throw std::invalid_argument(who + "text features have no tokens");
  }
  if (gt_spans.empty()) {
    throw std::invalid_argument(who + "no ground-truth spans");
  }
  for (const MomentSpan& s : gt_spans) {
    if (!(s.start >= 0.0 && s.start <= s.end && s.end <= 1.0)) {
      throw std::invalid_argument(who + "invalid span [" +
                                  std::to_string(s.start) + ", " +
                                  std::to_string(s.end) + "]");
    }
  }
  if (saliency_labels && static_cast<Eigen::Index>(saliency_labels->size()) !=
                             video_feats.rows()) {
    throw std::invalid_argument(who + "saliency labels have length " +
                                std::to_string(saliency_labels->size()) +
                                ", expected " +
                                std::to_string(video_feats.rows()));
  }
  if (!(duration > 0.0)) {
    throw std::invalid_argument(who + "duration must be positive");
  }
}

std::vector<double> ClipPositions(int num_clips) {
  std::vector<double> out(static_cast<size_t>(std::max(num_clips, 0)), 0.0);
  if (num_clips <= 1) return out;
  for (int i = 0; i < num_clips; ++i) {
    out[i] = static_cast<double>(i) / static_cast<double>(num_clips - 1);
  }
  return out;
}

std::vector<bool> InsideMask(std::span<const MomentSpan> spans,
                             std::span<const double> clip_positions) {
  std::vector<bool> inside(clip_positions.size(), false);
  for (size_t i = 0; i < clip_positions.size(); ++i) {
    for (const MomentSpan& s : spans) {
      if (clip_positions[i] >= s.start && clip_positions[i] <= s.end) {
        inside[i] = true;
        break;
      }
    }
  }
  return inside;
}

Encoder::Encoder(ParameterStore& store, const EncoderOptions& options,
                 Rng& init)
    : options_(options) {
  const int d = options.model_dim;
  if (d <= 0 || options.heads <= 0 || d % options.heads != 0) {
    throw std::invalid_argument("model_dim must be divisible by heads");
  }
  video_proj_ = Linear(store, "encoder.video_proj", options.video_dim, d, init);
  text_proj_ = Linear(store, "encoder.text_proj", options.text_dim, d, init);
  for (int l = 0; l < options.layers; ++l) {
    const std::string name = "encoder.cross" + std::to_string(l);
    cross_.push_back({AttentionProjections(store, name + ".attn", d, d, init),
                      FeedForward(store, name + ".ffn", d, options.ffn_hidden,
                                  init)});
  }
  for (int l = 0; l < options.layers; ++l) {
    const std::string name = "encoder.self" + std::to_string(l);
    self_.push_back({AttentionProjections(store, name + ".attn", d, d, init),
                     FeedForward(store, name + ".ffn", d, options.ffn_hidden,
                                 init)});
  }
  saliency_ = Linear(store, "encoder.saliency", d, 1, init);
}

Encoder::Projected Encoder::ProjectUnimodal(const ForwardContext& ctx,
                                            const Matrix& video,
                                            const Matrix& text) const {
  if (video.cols() != options_.video_dim) {
    throw std::invalid_argument(
        "video feature width " + std::to_string(video.cols()) +
        " does not match configured " + std::to_string(options_.video_dim));
  }
  if (text.cols() != options_.text_dim) {
    throw std::invalid_argument(
        "text feature width " + std::to_string(text.cols()) +
        " does not match configured " + std::to_string(options_.text_dim));
  }
  Graph& g = ctx.graph;
  return {video_proj_(g, g.Constant(video)), text_proj_(g, g.Constant(text))};
}

Var Encoder::CrossAttentionBlock(const ForwardContext& ctx, int layer,
                                 const Var& video, const Var& text) const {
  const Block& b = cross_.at(layer);
  Graph& g = ctx.graph;
  Var q = b.attention.query()(g, video);
  Var k = b.attention.key()(g, text);
  Var v = b.attention.value()(g, text);
  Var attended = b.attention.output()(
      g, MultiHeadAttend(ctx, q, k, v, options_.heads));
  Var mid = ctx.Drop(attended) + video;
  return b.ffn(ctx, mid) + mid;
}

Var Encoder::SelfAttentionBlock(const ForwardContext& ctx, int layer,
                                const Var& video,
                                const Matrix& positional) const {
  const Block& b = self_.at(layer);
  Graph& g = ctx.graph;
  Var with_pos = video + g.Constant(positional);
  Var q = b.attention.query()(g, with_pos);
  Var k = b.attention.key()(g, with_pos);
  Var v = b.attention.value()(g, video);
  Var attended = b.attention.output()(
      g, MultiHeadAttend(ctx, q, k, v, options_.heads));
  Var mid = ctx.Drop(attended) + video;
  return b.ffn(ctx, mid) + mid;
}

MemoryBank Encoder::Encode(const ForwardContext& ctx, const Matrix& video,
                           const Matrix& text) const {
  Projected p = ProjectUnimodal(ctx, video, text);
  MemoryBank bank;
  bank.clip_positions = ClipPositions(static_cast<int>(video.rows()));
  bank.positional_enc =
      SinusoidalEncoding(bank.clip_positions, options_.model_dim);
  Var v = p.video;
  for (int l = 0; l < options_.layers; ++l) {
    v = CrossAttentionBlock(ctx, l, v, p.text);
  }
  for (int l = 0; l < options_.layers; ++l) {
    v = SelfAttentionBlock(ctx, l, v, bank.positional_enc);
  }
  bank.memory = v;
  return bank;
}

Var Encoder::SaliencyScores(const ForwardContext& ctx,
                            const Var& memory) const {
  return saliency_(ctx.graph, memory);
}

std::optional<SaliencyPair> SampleSaliencyPair(
    const std::optional<std::vector<double>>& labels,
    const std::vector<bool>& inside, Rng& rng) {
  auto pick = [&rng](const std::vector<int>& pool) {
    return pool[static_cast<size_t>(
        rng.UniformInt(0, static_cast<int>(pool.size()) - 1))];
  };
  std::vector<int> low, high;
  if (labels) {
    const auto [lo_it, hi_it] =
        std::minmax_element(labels->begin(), labels->end());
    if (lo_it == labels->end() || *lo_it == *hi_it) return std::nullopt;
    for (size_t i = 0; i < labels->size(); ++i) {
      if ((*labels)[i] == *lo_it) low.push_back(static_cast<int>(i));
      if ((*labels)[i] == *hi_it) high.push_back(static_cast<int>(i));
    }
  } else {
    for (size_t i = 0; i < inside.size(); ++i) {
      (inside[i] ? high : low).push_back(static_cast<int>(i));
    }
    if (low.empty() || high.empty()) return std::nullopt;
  }
  SaliencyPair pair;
  pair.low = pick(low);
  pair.high = pick(high);
  return pair;
}

LossTerm MarginSaliencyLoss(const Var& scores,
                            std::span<const SaliencyPair> pairs,
                            double margin) {
  Graph& g = *scores.graph();
  if (pairs.empty()) return {g.Constant(0.0), true};
  std::vector<int> low, high;
  for (const SaliencyPair& p : pairs) {
    low.push_back(p.low);
    high.push_back(p.high);
  }
  Var gap = GatherRows(scores, low) - GatherRows(scores, high);
  return {Mean(Relu(AddScalar(gap, margin))), false};
}

std::vector<double> ContrastiveReferences(std::span<const double> labels,
                                          const std::vector<bool>& inside) {
  std::vector<double> refs;
  for (size_t i = 0; i < labels.size() && i < inside.size(); ++i) {
    if (inside[i] && labels[i] > 0.0) refs.push_back(labels[i]);
  }
  std::sort(refs.begin(), refs.end());
  refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
  return refs;
}

LossTerm RankContrastiveLoss(const Var& scores, std::span<const double> labels,
                             std::span<const double> references, double tau) {
  Graph& g = *scores.graph();
  if (static_cast<Eigen::Index>(labels.size()) != scores.rows()) {
    throw std::invalid_argument("contrastive loss: label count mismatch");
  }
  Var logits = Scale(scores, 1.0 / tau);
  Var all = LogSumExp(logits);
  std::vector<Var> terms;
  for (double r : references) {
    std::vector<int> positive;
    for (size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] > r) positive.push_back(static_cast<int>(i));
    }
    if (positive.empty()) continue;
    terms.push_back(all - LogSumExp(GatherRows(logits, positive)));
  }
  if (terms.empty()) return {g.Constant(0.0), true};
  Var total = terms.front();
  for (size_t i = 1; i < terms.size(); ++i) total = total + terms[i];
  return {total, false};
}

LossTerm NegativeRelationLoss(const Var& negative_scores) {
  return {Sum(Softplus(negative_scores)), false};
}

}  // namespace bam
