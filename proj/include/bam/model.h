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

#ifndef BAM_MODEL_H_
#define BAM_MODEL_H_

#include <optional>
#include <vector>

#include "bam/config.h"
#include "bam/decoder.h"
#include "bam/encoder.h"
#include "bam/objective.h"

namespace bam {

// Output of one forward pass over one sample.
struct SampleForward {
  MemoryBank memory;
  LocalityMemory locality;
  DecodeResult decode;
  std::vector<Var> qualities;  // one per decoder layer (>= 1)
  Var saliency_scores;         // N_v x 1
};

// Ranked output for one sample, times normalized.
struct SamplePrediction {
  std::vector<RankedProposal> ranked;
  std::vector<double> anchors;  // parallel to `ranked`
  std::vector<double> offsets;  // all layers, both sides, raw
};

// Encoder + dual-pathway decoder + quality head, sized from a Config.
class Model {
 public:
  Model(const Config& config, int video_dim, int text_dim);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const Config& config() const { return config_; }
  const Encoder& encoder() const { return encoder_; }
  const Decoder& decoder() const { return decoder_; }
  const QualityHead& quality_head() const { return quality_; }

  // `initial` replaces the learnable decoder state when given.
  SampleForward Forward(const ForwardContext& ctx, const Sample& sample,
                        std::optional<DecoderState> initial = std::nullopt) const;

  // Full training objective for `sample`. `negative` supplies the unmatched
  // sentence for the negative relation loss (skipped when null).
  TotalLoss Loss(const ForwardContext& ctx, const Sample& sample,
                 const Sample* negative, Rng& pair_rng) const;

  // Evaluation-mode forward, ranking by quality score.
  SamplePrediction Predict(const Sample& sample) const;

  ObjectiveOptions objective_options() const;

 private:
  Config config_;
  Rng init_rng_;
  ParameterStore params_;
  Encoder encoder_;
  Decoder decoder_;
  QualityHead quality_;
};

}  // namespace bam

#endif  // BAM_MODEL_H_
