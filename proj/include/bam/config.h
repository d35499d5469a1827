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

#ifndef BAM_CONFIG_H_
#define BAM_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>

namespace bam {

// Flat key = value configuration. Keys are the field names below; '#' starts
// a comment. BAM_SEED in the environment overrides `seed`.
struct Config {
  int D = 256;
  int heads = 8;
  int M = 10;
  int K = 3;
  double alpha = 0.2;
  int L_E = 2;
  int L_D = 2;
  double lambda_l1 = 10.0;
  double lambda_iou = 1.0;
  double lambda_sal = 1.0;
  double lambda_sal_unlabeled = 4.0;
  double lambda_regul = 1.0;
  double lambda_qual = 2.0;
  double lr = 1e-4;
  int batch = 32;
  int epochs = 200;
  uint64_t seed = 0;
  bool deep_supervision = true;
  int video_dim = 0;  // 0: take from the dataset
  int text_dim = 0;   // 0: take from the dataset
  double clip_stride = 2.0;  // seconds per clip

  double weight_decay = 1e-4;
  double grad_clip = 0.1;  // max global gradient norm; <= 0 disables
  double dropout = 0.1;
  double tau = 0.5;
  int ffn_mult = 4;
  int max_steps = 0;   // 0: epochs * steps_per_epoch
  int lr_drop_step = 0;        // lr is scaled by lr_drop_factor from this step; 0 keeps it constant
  double lr_drop_factor = 0.1;
  int max_clips = 0;   // 0: no subsampling at ingestion
  int eval_every = 1;  // epochs between evaluations; 0 disables
  bool detach_quality_target = true;

  // Throws std::invalid_argument naming the offending key.
  void Validate() const;
  std::map<std::string, std::string> ToMap() const;
  std::string ToText() const;
};

Config ParseConfig(const std::string& text);
Config LoadConfig(const std::string& path);
// Sets one key from its textual value; throws on unknown keys.
void SetConfigValue(Config& config, const std::string& key,
                    const std::string& value);
// Applies BAM_SEED when set.
void ApplyEnvironment(Config& config);

}  // namespace bam

#endif  // BAM_CONFIG_H_
