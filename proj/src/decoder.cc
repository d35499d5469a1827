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

#include "bam/decoder.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "bam/ops.h"

namespace bam {
namespace {

double Logit(double x) { return std::log(x / (1.0 - x)); }

Var ColumnOf(const Var& m, Eigen::Index c) { return SliceCols(m, c, 1); }

void FillUniform(Parameter& p, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    p.value.data()[i] = rng.Uniform(-bound, bound);
  }
}

}  // namespace

Matrix DecoderState::Predictions() const {
  Matrix out(anchor.rows(), 3);
  out.col(0) = anchor.value().col(0);
  out.col(1) = start_distance.value().col(0);
  out.col(2) = end_distance.value().col(0);
  return out;
}

MomentTriplet DecoderState::Triplet(int m) const {
  return {anchor.value()(m, 0), start_distance.value()(m, 0),
          end_distance.value()(m, 0)};
}

std::vector<MomentSpan> DecoderState::Spans() const {
  std::vector<MomentSpan> out;
  out.reserve(static_cast<size_t>(num_queries()));
  for (int m = 0; m < num_queries(); ++m) out.push_back(TripletToSpan(Triplet(m)));
  return out;
}

Var DecoderState::StartTimes() const { return anchor - start_distance; }
Var DecoderState::EndTimes() const { return anchor + end_distance; }

BoundaryLabels MakeBoundaryLabels(std::span<const MomentSpan> gt_spans,
                                  std::span<const double> clip_positions,
                                  double radius_ratio) {
  BoundaryLabels labels;
  labels.start.assign(clip_positions.size(), 0.0);
  labels.end.assign(clip_positions.size(), 0.0);
  for (const MomentSpan& s : gt_spans) {
    const double radius = radius_ratio * s.length();
    for (size_t i = 0; i < clip_positions.size(); ++i) {
      if (std::abs(clip_positions[i] - s.start) <= radius) labels.start[i] = 1;
      if (std::abs(clip_positions[i] - s.end) <= radius) labels.end[i] = 1;
    }
  }
  return labels;
}

Var BoundaryRegularizationLoss(const Var& start_activation,
                               const Var& end_activation,
                               const BoundaryLabels& labels, double eps) {
  Graph& g = *start_activation.graph();
  auto side = [&](const Var& act, const std::vector<double>& target) {
    if (static_cast<Eigen::Index>(target.size()) != act.rows()) {
      throw std::invalid_argument("boundary labels length mismatch");
    }
    const Eigen::Index n = act.rows();
    Var lo = g.Constant(Matrix::Constant(n, 1, eps));
    Var hi = g.Constant(Matrix::Constant(n, 1, 1.0 - eps));
    Var clipped = Minimum(Maximum(act, lo), hi);
    Matrix t(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) t(i, 0) = target[i];
    Var pos = g.Constant(t);
    Var neg = g.Constant((1.0 - t.array()).matrix());
    Var ll = Mul(pos, Log(clipped)) +
             Mul(neg, Log(AddScalar(Neg(clipped), 1.0)));
    return Neg(Mean(ll));
  };
  return side(start_activation, labels.start) + side(end_activation, labels.end);
}

Var SigmoidRefine(const Var& prev, const Var& delta, double eps) {
  return Sigmoid(InverseSigmoid(prev, eps) + delta);
}

Decoder::Decoder(ParameterStore& store, const DecoderOptions& options,
                 Rng& init)
    : options_(options) {
  const int d = options.model_dim;
  const int m = options.queries;
  const int k = options.sample_points;
  if (d <= 0 || d % 2 != 0 || options.heads <= 0 || d % options.heads != 0) {
    throw std::invalid_argument("decoder width must be even and divisible by "
                                "heads");
  }
  if (m <= 0 || k <= 0) {
    throw std::invalid_argument("decoder needs >= 1 query and sample point");
  }
  const double qbound = std::sqrt(6.0 / (m + d));
  init_anchor_queries_ = &store.Create("decoder.init.anchor_queries", m, d);
  init_start_queries_ = &store.Create("decoder.init.start_queries", m, d);
  init_end_queries_ = &store.Create("decoder.init.end_queries", m, d);
  FillUniform(*init_anchor_queries_, qbound, init);
  FillUniform(*init_start_queries_, qbound, init);
  FillUniform(*init_end_queries_, qbound, init);
  init_spans_ = &store.Create("decoder.init.span_logits", m, 3);
  for (int i = 0; i < m; ++i) {
    init_spans_->value(i, 0) = Logit((i + 0.5) / m);
    init_spans_->value(i, 1) = Logit(options.initial_distance);
    init_spans_->value(i, 2) = Logit(options.initial_distance);
  }

  for (int c = 0; c < options.conv_layers; ++c) {
    start_convs_.emplace_back(store, "decoder.start_conv" + std::to_string(c),
                              3 * d, d, init);
  }
  for (int c = 0; c < options.conv_layers; ++c) {
    end_convs_.emplace_back(store, "decoder.end_conv" + std::to_string(c),
                            3 * d, d, init);
  }

  const int embed_dims[] = {3 * d, d, d};
  const int delta_dims[] = {d, d, 1};
  auto make_path = [&](const std::string& name) {
    BoundaryPath path{Linear(store, name + ".offsets", d, k, init),
                      Linear(store, name + ".weights", d, k, init),
                      Linear(store, name + ".project", 2 * d, d, init),
                      FeedForward(store, name + ".ffn", d, options.ffn_hidden,
                                  init),
                      Mlp(store, name + ".delta", delta_dims, init)};
    // Start with small offsets spread symmetrically around the origin.
    path.offsets.weight().value *= 0.01;
    for (int j = 0; j < k; ++j) {
      path.offsets.bias().value(0, j) = 0.01 * (j - 0.5 * (k - 1));
    }
    // Zero the last refinement layer so initial spans pass through unchanged.
    path.delta.layers().back().weight().value.setZero();
    return path;
  };
  for (int l = 0; l < options.layers; ++l) {
    const std::string name = "decoder.layer" + std::to_string(l);
    Layer layer{Mlp(store, name + ".span_embed", embed_dims, init),
                AttentionProjections(store, name + ".self_attn", d, d, init),
                AttentionProjections(store, name + ".cross_attn", d, d, init),
                FeedForward(store, name + ".anchor_ffn", d, options.ffn_hidden,
                            init),
                Mlp(store, name + ".anchor_delta", delta_dims, init),
                make_path(name + ".start"), make_path(name + ".end")};
    layer.anchor_delta.layers().back().weight().value.setZero();
    layers_.push_back(std::move(layer));
  }
}

DecoderState Decoder::InitialState(const ForwardContext& ctx) const {
  Graph& g = ctx.graph;
  DecoderState s;
  s.anchor_queries = g.Param(*init_anchor_queries_);
  s.start_queries = g.Param(*init_start_queries_);
  s.end_queries = g.Param(*init_end_queries_);
  Var spans = Sigmoid(g.Param(*init_spans_));
  s.anchor = ColumnOf(spans, 0);
  s.start_distance = ColumnOf(spans, 1);
  s.end_distance = ColumnOf(spans, 2);
  return s;
}

Var Decoder::AnchorSelfAttention(const ForwardContext& ctx, int layer,
                                 const DecoderState& state) const {
  const Layer& l = layers_.at(layer);
  Graph& g = ctx.graph;
  const int d = options_.model_dim;
  Var pe = ConcatCols({SinusoidalEncoding(state.anchor, d),
                       SinusoidalEncoding(state.start_distance, d),
                       SinusoidalEncoding(state.end_distance, d)});
  Var span_pos = l.span_embed(g, pe);
  const Var& c = state.anchor_queries;
  Var q = l.self_attn.query()(g, c) + span_pos;
  Var k = l.self_attn.key()(g, c) + span_pos;
  Var v = l.self_attn.value()(g, c);
  Var attended =
      l.self_attn.output()(g, MultiHeadAttend(ctx, q, k, v, options_.heads));
  return ctx.Drop(attended) + c;
}

Var Decoder::AnchorCrossAttention(const ForwardContext& ctx, int layer,
                                  const Var& queries, const Var& anchor,
                                  const MemoryBank& memory) const {
  const Layer& l = layers_.at(layer);
  Graph& g = ctx.graph;
  Var q = l.cross_attn.query()(g, queries);
  Var k = l.cross_attn.key()(g, memory.memory);
  Var v = l.cross_attn.value()(g, memory.memory);
  Var q_pos = SinusoidalEncoding(anchor, options_.model_dim);
  Var k_pos = g.Constant(memory.positional_enc);
  Var attended = l.cross_attn.output()(
      g, MultiHeadAttend(ctx, q, k, v, options_.heads, q_pos, k_pos));
  return ctx.Drop(attended) + queries;
}

Var Decoder::AnchorFeedForward(const ForwardContext& ctx, int layer,
                               const Var& queries) const {
  return layers_.at(layer).anchor_ffn(ctx, queries) + queries;
}

Var Decoder::RefineAnchor(const ForwardContext& ctx, int layer,
                          const Var& queries, const Var& anchor) const {
  return SigmoidRefine(anchor, layers_.at(layer).anchor_delta(ctx.graph, queries));
}

Var Decoder::ConvStack(Graph& g, const std::vector<Linear>& convs,
                       const Var& x) const {
  Var h = x;
  for (size_t c = 0; c < convs.size(); ++c) {
    h = convs[c](g, ConcatCols({ShiftRows(h, -1), h, ShiftRows(h, 1)}));
    if (c + 1 < convs.size()) h = Relu(h);
  }
  return h;
}

LocalityMemory Decoder::BuildLocalityMemory(const ForwardContext& ctx,
                                            const MemoryBank& memory) const {
  Graph& g = ctx.graph;
  LocalityMemory out;
  out.start_features = ConvStack(g, start_convs_, memory.memory);
  out.end_features = ConvStack(g, end_convs_, memory.memory);
  out.start_enhanced = ConcatCols({memory.memory, out.start_features});
  out.end_enhanced = ConcatCols({memory.memory, out.end_features});
  out.start_activation = RowMean(Sigmoid(out.start_features));
  out.end_activation = RowMean(Sigmoid(out.end_features));
  return out;
}

Decoder::FocusedAttention Decoder::BoundaryFocusedAttention(
    const ForwardContext& ctx, int layer, Boundary side, const Var& queries,
    const Var& origin, const Var& enhanced) const {
  const BoundaryPath& path = Path(layer, side);
  Graph& g = ctx.graph;
  Var offsets = path.offsets(g, queries);
  Var weights = SoftmaxRows(path.weights(g, queries));
  Var aggregated;
  for (int k = 0; k < options_.sample_points; ++k) {
    Var sampled = InterpolateRows(enhanced, origin + ColumnOf(offsets, k));
    Var weighted = MulCol(sampled, ColumnOf(weights, k));
    aggregated = (k == 0) ? weighted : aggregated + weighted;
  }
  FocusedAttention out;
  out.queries = path.project(g, aggregated) + queries;
  out.offsets = offsets.value();
  out.weights = weights.value();
  return out;
}

Var Decoder::BoundaryFeedForward(const ForwardContext& ctx, int layer,
                                 Boundary side, const Var& queries) const {
  return Path(layer, side).ffn(ctx, queries);
}

Var Decoder::RefineBoundary(const ForwardContext& ctx, int layer,
                            Boundary side, const Var& queries,
                            const Var& distance) const {
  return SigmoidRefine(distance, Path(layer, side).delta(ctx.graph, queries));
}

DecodeResult Decoder::Decode(const ForwardContext& ctx,
                             const MemoryBank& memory,
                             const LocalityMemory& locality) const {
  return Decode(ctx, memory, locality, InitialState(ctx));
}

DecodeResult Decoder::Decode(const ForwardContext& ctx,
                             const MemoryBank& memory,
                             const LocalityMemory& locality,
                             DecoderState initial) const {
  DecodeResult result;
  result.initial = std::move(initial);
  result.layers.reserve(static_cast<size_t>(options_.layers));
  const DecoderState* prev = &result.initial;
  for (int l = 0; l < options_.layers; ++l) {
    DecoderState next;
    // Anchor pathway.
    Var c = AnchorSelfAttention(ctx, l, *prev);
    c = AnchorCrossAttention(ctx, l, c, prev->anchor, memory);
    next.anchor_queries = AnchorFeedForward(ctx, l, c);
    next.anchor = RefineAnchor(ctx, l, next.anchor_queries, prev->anchor);

    // Boundary pathway, anchored at the updated p.
    FocusedAttention s = BoundaryFocusedAttention(
        ctx, l, Boundary::kStart, prev->start_queries,
        next.anchor - prev->start_distance, locality.start_enhanced);
    FocusedAttention e = BoundaryFocusedAttention(
        ctx, l, Boundary::kEnd, prev->end_queries,
        next.anchor + prev->end_distance, locality.end_enhanced);
    next.start_queries = BoundaryFeedForward(ctx, l, Boundary::kStart, s.queries);
    next.end_queries = BoundaryFeedForward(ctx, l, Boundary::kEnd, e.queries);
    next.start_distance = RefineBoundary(ctx, l, Boundary::kStart,
                                         next.start_queries,
                                         prev->start_distance);
    next.end_distance = RefineBoundary(ctx, l, Boundary::kEnd,
                                       next.end_queries, prev->end_distance);
    next.start_offsets = std::move(s.offsets);
    next.end_offsets = std::move(e.offsets);
    result.layers.push_back(std::move(next));
    prev = &result.layers.back();
  }
  return result;
}

}  // namespace bam
