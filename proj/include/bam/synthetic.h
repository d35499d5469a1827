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

#ifndef BAM_SYNTHETIC_H_
#define BAM_SYNTHETIC_H_

#include <cstdint>

#include "bam/dataset.h"

namespace bam {

struct SyntheticOptions {
  int min_clips = 40;
  int max_clips = 80;
  int min_moments = 1;
  int max_moments = 2;  // up to 3
  int min_tokens = 3;
  int max_tokens = 6;
  int video_dim = 16;
  int text_dim = 16;
  double noise = 0.3;
  double clip_stride = 2.0;  // seconds per clip
  // Fraction of moments whose middle third carries a weaker signal and
  // saliency 0.5.
  double dip_probability = 0.0;
  double dip_strength = 0.5;
  // Plant a segment of an unrelated pattern outside the moments.
  bool distractor = true;
  double min_moment_fraction = 0.1;
  double max_moment_fraction = 0.35;
};

// Each sample gets its own random pattern. Clips inside the planted moments
// carry the pattern plus noise, clips outside carry noise only (and possibly a
// distractor pattern); every text token is a fixed random linear image of the
// pattern plus noise. Moment boundaries sit exactly on clip positions.
// Saliency labels are 1 inside moments (dip clips 0.5) and 0 outside.
// Features are rounded to float32 so a saved dataset reloads identically.
Dataset GenerateSynthetic(int n_samples, uint64_t seed,
                          const SyntheticOptions& options = {});

}  // namespace bam

#endif  // BAM_SYNTHETIC_H_
