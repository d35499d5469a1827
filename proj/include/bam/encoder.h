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

#ifndef BAM_ENCODER_H_
#define BAM_ENCODER_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bam/autograd.h"
#include "bam/intervals.h"
#include "bam/layers.h"

namespace bam {

// One video-sentence pair. Spans are in normalized time.
struct Sample {
  std::string qid;
  std::string vid;
  Matrix video_feats;  // N_v x D_v
  Matrix text_feats;   // N_t x D_t
  std::vector<MomentSpan> gt_spans;
  std::optional<std::vector<double>> saliency_labels;  // length N_v
  double duration = 0.0;                               // seconds

  int num_clips() const { return static_cast<int>(video_feats.rows()); }
  // Throws std::invalid_argument describing the first violated invariant.
  void Validate() const;
};

// Normalized time of each clip: i / (N_v - 1), or 0 for a single clip. These
// are the coordinates used by memory sampling and boundary labels.
std::vector<double> ClipPositions(int num_clips);

// Clips whose position lies inside any of the spans (inclusive).
std::vector<bool> InsideMask(std::span<const MomentSpan> spans,
                             std::span<const double> clip_positions);

struct MemoryBank {
  Var memory;  // N_v x D
  std::vector<double> clip_positions;
  Matrix positional_enc;  // N_v x D
};

struct EncoderOptions {
  int video_dim = 0;
  int text_dim = 0;
  int model_dim = 256;
  int heads = 8;
  int layers = 2;  // cross-attention blocks, then as many self-attention blocks
  int ffn_hidden = 1024;
};

// Text-to-video encoder: unimodal projection, cross-attention blocks that
// inject text into clips, then self-attention blocks over clips.
class Encoder {
 public:
  Encoder(ParameterStore& store, const EncoderOptions& options, Rng& init);

  struct Projected {
    Var video;  // N_v x D
    Var text;   // N_t x D
  };
  Projected ProjectUnimodal(const ForwardContext& ctx, const Matrix& video,
                            const Matrix& text) const;

  Var CrossAttentionBlock(const ForwardContext& ctx, int layer,
                          const Var& video, const Var& text) const;
  // Positional encoding is added to the query and key inputs only.
  Var SelfAttentionBlock(const ForwardContext& ctx, int layer,
                         const Var& video, const Matrix& positional) const;

  MemoryBank Encode(const ForwardContext& ctx, const Matrix& video,
                    const Matrix& text) const;

  // Saliency predictor S: one affine map to a scalar per clip (N_v x 1).
  Var SaliencyScores(const ForwardContext& ctx, const Var& memory) const;

  const EncoderOptions& options() const { return options_; }

 private:
  struct Block {
    AttentionProjections attention;
    FeedForward ffn;
  };

  EncoderOptions options_;
  Linear video_proj_;
  Linear text_proj_;
  std::vector<Block> cross_;
  std::vector<Block> self_;
  Linear saliency_;
};

// A loss that may be inapplicable for a sample; skipped terms are zero.
struct LossTerm {
  Var value;
  bool skipped = false;
};

struct SaliencyPair {
  int low = 0;
  int high = 0;
};

// One (low, high) pair. With labels: a lowest-label clip against a
// highest-label clip (ties broken by `rng`). Without: a random clip outside
// the GT spans against a random clip inside. nullopt when no pair exists.
std::optional<SaliencyPair> SampleSaliencyPair(
    const std::optional<std::vector<double>>& labels,
    const std::vector<bool>& inside, Rng& rng);

// Mean over pairs of max(0, margin + S(low) - S(high)).
LossTerm MarginSaliencyLoss(const Var& scores,
                            std::span<const SaliencyPair> pairs,
                            double margin);

// Reference scores: distinct labels of positive (> 0) clips inside GT spans.
std::vector<double> ContrastiveReferences(std::span<const double> labels,
                                          const std::vector<bool>& inside);

// -sum_r log( sum_{label > r} exp(S/tau) / sum_all exp(S/tau) ). References
// with an empty positive set are skipped; the term is flagged skipped when no
// reference contributes.
LossTerm RankContrastiveLoss(const Var& scores, std::span<const double> labels,
                             std::span<const double> references, double tau);

// -sum log(1 - sigmoid(S)) over clips encoded with an unmatched sentence.
LossTerm NegativeRelationLoss(const Var& negative_scores);

}  // namespace bam

#endif  // BAM_ENCODER_H_
