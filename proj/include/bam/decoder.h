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

#ifndef BAM_DECODER_H_
#define BAM_DECODER_H_

#include <span>
#include <vector>

#include "bam/autograd.h"
#include "bam/encoder.h"
#include "bam/intervals.h"
#include "bam/layers.h"

namespace bam {

inline constexpr double kRefineEps = 1e-6;

enum class Boundary { kStart, kEnd };

// Queries and (p, d_s, d_e) predictions after one decoding layer (or the
// learnable initial state).
struct DecoderState {
  Var anchor_queries;  // M x D
  Var start_queries;   // M x D
  Var end_queries;     // M x D
  Var anchor;          // M x 1
  Var start_distance;  // M x 1
  Var end_distance;    // M x 1
  // Raw boundary-attention offsets (normalized time) that produced this
  // state, M x K; empty for the initial state.
  Matrix start_offsets;
  Matrix end_offsets;

  int num_queries() const { return static_cast<int>(anchor.rows()); }
  // M x 3 of (p, d_s, d_e).
  Matrix Predictions() const;
  MomentTriplet Triplet(int m) const;
  // Row-wise TripletToSpan (clamped to [0, 1]).
  std::vector<MomentSpan> Spans() const;
  // Unclamped (p - d_s, p + d_e) as differentiable columns.
  Var StartTimes() const;
  Var EndTimes() const;
};

struct LocalityMemory {
  Var start_features;    // V_s, N_v x D
  Var end_features;      // V_e, N_v x D
  Var start_enhanced;    // [V || V_s], N_v x 2D
  Var end_enhanced;      // [V || V_e], N_v x 2D
  Var start_activation;  // channel mean of sigmoid(V_s), N_v x 1
  Var end_activation;    // N_v x 1
};

struct BoundaryLabels {
  std::vector<double> start;  // 0/1 per clip
  std::vector<double> end;
};

// g_i = 1 iff |clip_position_i - boundary| <= radius_ratio * length for some
// GT span (inclusive).
BoundaryLabels MakeBoundaryLabels(std::span<const MomentSpan> gt_spans,
                                  std::span<const double> clip_positions,
                                  double radius_ratio = 0.1);

// Binary cross-entropy averaged over clips, summed over both sides. The
// activations are clipped into [eps, 1 - eps] before the logs.
Var BoundaryRegularizationLoss(const Var& start_activation,
                               const Var& end_activation,
                               const BoundaryLabels& labels,
                               double eps = kRefineEps);

// sigmoid(logit(prev) + delta) with prev clipped to [eps, 1 - eps].
Var SigmoidRefine(const Var& prev, const Var& delta, double eps = kRefineEps);

struct DecoderOptions {
  int model_dim = 256;
  int heads = 8;
  int queries = 10;
  int sample_points = 3;
  int layers = 2;
  int ffn_hidden = 1024;
  int conv_layers = 2;
  double initial_distance = 0.05;
};

struct DecodeResult {
  DecoderState initial;
  std::vector<DecoderState> layers;

  const DecoderState& Final() const {
    return layers.empty() ? initial : layers.back();
  }
};

// Dual-pathway decoder: each layer updates anchors with self- and global
// cross-attention, then boundaries with boundary-focused sampling of the
// locality-enhanced memory.
class Decoder {
 public:
  Decoder(ParameterStore& store, const DecoderOptions& options, Rng& init);

  DecoderState InitialState(const ForwardContext& ctx) const;

  Var AnchorSelfAttention(const ForwardContext& ctx, int layer,
                          const DecoderState& state) const;
  // Queries [Q || PE(p)] against keys [K || PE(clip positions)].
  Var AnchorCrossAttention(const ForwardContext& ctx, int layer,
                           const Var& queries, const Var& anchor,
                           const MemoryBank& memory) const;
  // Anchor FFN with residual.
  Var AnchorFeedForward(const ForwardContext& ctx, int layer,
                        const Var& queries) const;
  Var RefineAnchor(const ForwardContext& ctx, int layer, const Var& queries,
                   const Var& anchor) const;

  LocalityMemory BuildLocalityMemory(const ForwardContext& ctx,
                                     const MemoryBank& memory) const;

  struct FocusedAttention {
    Var queries;     // M x D
    Matrix offsets;  // M x K
    Matrix weights;  // M x K
  };
  // Samples K points at origin + offset_k and adds their softmax-weighted,
  // projected sum to the queries.
  FocusedAttention BoundaryFocusedAttention(const ForwardContext& ctx,
                                            int layer, Boundary side,
                                            const Var& queries,
                                            const Var& origin,
                                            const Var& enhanced) const;
  // Boundary FFN (no residual).
  Var BoundaryFeedForward(const ForwardContext& ctx, int layer, Boundary side,
                          const Var& queries) const;
  Var RefineBoundary(const ForwardContext& ctx, int layer, Boundary side,
                     const Var& queries, const Var& distance) const;

  DecodeResult Decode(const ForwardContext& ctx, const MemoryBank& memory,
                      const LocalityMemory& locality) const;
  // Same, starting from `initial` instead of the learnable state.
  DecodeResult Decode(const ForwardContext& ctx, const MemoryBank& memory,
                      const LocalityMemory& locality,
                      DecoderState initial) const;

  const DecoderOptions& options() const { return options_; }

  // Learnable initial span logits (M x 3) for callers that plant proposals.
  Parameter& initial_span_logits() const { return *init_spans_; }

 private:
  struct BoundaryPath {
    Linear offsets;
    Linear weights;
    Linear project;  // 2D -> D
    FeedForward ffn;
    Mlp delta;
  };
  struct Layer {
    Mlp span_embed;  // PE(A) (3D) -> D
    AttentionProjections self_attn;
    AttentionProjections cross_attn;
    FeedForward anchor_ffn;
    Mlp anchor_delta;
    BoundaryPath start;
    BoundaryPath end;
  };

  const BoundaryPath& Path(int layer, Boundary side) const {
    const Layer& l = layers_.at(layer);
    return side == Boundary::kStart ? l.start : l.end;
  }
  Var ConvStack(Graph& g, const std::vector<Linear>& convs,
                const Var& x) const;

  DecoderOptions options_;
  Parameter* init_anchor_queries_ = nullptr;
  Parameter* init_start_queries_ = nullptr;
  Parameter* init_end_queries_ = nullptr;
  Parameter* init_spans_ = nullptr;
  std::vector<Linear> start_convs_;
  std::vector<Linear> end_convs_;
  std::vector<Layer> layers_;
};

}  // namespace bam

#endif  // BAM_DECODER_H_
