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

#ifndef BAM_LAYERS_H_
#define BAM_LAYERS_H_

#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bam/autograd.h"
#include "bam/random.h"

namespace bam {

// Per-forward state shared by every layer.
struct ForwardContext {
  Graph& graph;
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;  // dropout stream; unused when !training

  Var Drop(const Var& v) const;
};

// y = x W + b with W: in x out, b: 1 x out. Xavier-uniform init, zero bias.
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, int in, int out,
         Rng& init);

  Var operator()(Graph& g, const Var& x) const;
  Parameter& weight() const { return *weight_; }
  Parameter& bias() const { return *bias_; }
  int in_dim() const { return static_cast<int>(weight_->value.rows()); }
  int out_dim() const { return static_cast<int>(weight_->value.cols()); }

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

// Affine layers with max(0, .) between them (none after the last).
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore& store, const std::string& name, std::span<const int> dims,
      Rng& init);

  Var operator()(Graph& g, const Var& x) const;
  const std::vector<Linear>& layers() const { return layers_; }

 private:
  std::vector<Linear> layers_;
};

// Two affine layers, hidden width `hidden`, max(0, .) between; dropout after
// the activation and on the output when training.
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(ParameterStore& store, const std::string& name, int dim,
              int hidden, Rng& init);

  Var operator()(const ForwardContext& ctx, const Var& x) const;
  const Linear& hidden_layer() const { return in_; }
  const Linear& output_layer() const { return out_; }

 private:
  Linear in_;
  Linear out_;
};

// Scaled dot-product attention split over `heads` column groups of the already
// projected q (Nq x D), k (Nk x D), v (Nk x D). When positional terms are
// given, each head attends with [q_h || qpos_h] . [k_h || kpos_h] and the scale
// uses the concatenated head width. Returns Nq x D (heads concatenated).
Var MultiHeadAttend(const ForwardContext& ctx, const Var& q, const Var& k,
                    const Var& v, int heads,
                    const std::optional<Var>& q_pos = std::nullopt,
                    const std::optional<Var>& k_pos = std::nullopt);

// Projections of a standard multi-head attention layer.
class AttentionProjections {
 public:
  AttentionProjections() = default;
  AttentionProjections(ParameterStore& store, const std::string& name,
                       int dim, int key_dim, Rng& init);

  const Linear& query() const { return q_; }
  const Linear& key() const { return k_; }
  const Linear& value() const { return v_; }
  const Linear& output() const { return o_; }

 private:
  Linear q_, k_, v_, o_;
};

inline constexpr double kPositionTemperature = 10000.0;
// Normalized positions are mapped onto [0, 2*pi] before encoding.
inline constexpr double kDefaultPositionScale = 2.0 * std::numbers::pi;

// Fixed sinusoidal encoding. Row i is
//   [sin(x_i / T^(0/D)), cos(x_i / T^(0/D)), sin(x_i / T^(2/D)), ...]
// with x_i = scale * positions[i] and T = 10000. D must be even.
Matrix SinusoidalEncoding(std::span<const double> positions, int dim,
                          double scale = kDefaultPositionScale);
// Differentiable version over a column of positions (N x 1).
Var SinusoidalEncoding(const Var& positions, int dim,
                       double scale = kDefaultPositionScale);

}  // namespace bam

#endif  // BAM_LAYERS_H_
