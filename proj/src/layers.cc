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

#include "bam/layers.h"

#include <cmath>
#include <stdexcept>

#include "bam/ops.h"

namespace bam {

Var ForwardContext::Drop(const Var& v) const {
  if (!training) return v;
  return Dropout(v, dropout, rng);
}

Linear::Linear(ParameterStore& store, const std::string& name, int in,
               int out, Rng& init) {
  weight_ = &store.Create(name + ".weight", in, out);
  bias_ = &store.Create(name + ".bias", 1, out);
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  for (Eigen::Index i = 0; i < weight_->value.size(); ++i) {
    weight_->value.data()[i] = init.Uniform(-bound, bound);
  }
}

Var Linear::operator()(Graph& g, const Var& x) const {
  return AddRow(MatMul(x, g.Param(*weight_)), g.Param(*bias_));
}

Mlp::Mlp(ParameterStore& store, const std::string& name,
         std::span<const int> dims, Rng& init) {
  if (dims.size() < 2) throw std::invalid_argument("Mlp needs >= 2 dims");
  for (size_t i = 0; i + 1 < dims.size(); ++i) {
    layers_.emplace_back(store, name + "." + std::to_string(i), dims[i],
                         dims[i + 1], init);
  }
}

Var Mlp::operator()(Graph& g, const Var& x) const {
  Var h = x;
  for (size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](g, h);
    if (i + 1 < layers_.size()) h = Relu(h);
  }
  return h;
}

FeedForward::FeedForward(ParameterStore& store, const std::string& name,
                         int dim, int hidden, Rng& init)
    : in_(store, name + ".in", dim, hidden, init),
      out_(store, name + ".out", hidden, dim, init) {}

Var FeedForward::operator()(const ForwardContext& ctx, const Var& x) const {
  Var h = ctx.Drop(Relu(in_(ctx.graph, x)));
  return ctx.Drop(out_(ctx.graph, h));
}

AttentionProjections::AttentionProjections(ParameterStore& store,
                                           const std::string& name, int dim,
                                           int key_dim, Rng& init)
    : q_(store, name + ".q", dim, dim, init),
      k_(store, name + ".k", key_dim, dim, init),
      v_(store, name + ".v", key_dim, dim, init),
      o_(store, name + ".o", dim, dim, init) {}

Var MultiHeadAttend(const ForwardContext& ctx, const Var& q, const Var& k,
                    const Var& v, int heads, const std::optional<Var>& q_pos,
                    const std::optional<Var>& k_pos) {
  const Eigen::Index dim = q.cols();
  if (heads <= 0 || dim % heads != 0) {
    throw std::invalid_argument("attention width not divisible by heads");
  }
  if (k.cols() != dim || v.cols() != dim || k.rows() != v.rows()) {
    throw std::invalid_argument("attention key/value shape mismatch");
  }
  if (q_pos.has_value() != k_pos.has_value()) {
    throw std::invalid_argument("positional terms must be given in pairs");
  }
  const Eigen::Index head_dim = dim / heads;
  const double width = static_cast<double>(q_pos ? 2 * head_dim : head_dim);
  const double scale = 1.0 / std::sqrt(width);
  std::vector<Var> outputs;
  outputs.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    const Eigen::Index at = h * head_dim;
    Var qh = SliceCols(q, at, head_dim);
    Var kh = SliceCols(k, at, head_dim);
    if (q_pos) {
      qh = ConcatCols({qh, SliceCols(*q_pos, at, head_dim)});
      kh = ConcatCols({kh, SliceCols(*k_pos, at, head_dim)});
    }
    Var weights = SoftmaxRows(Scale(MatMulNT(qh, kh), scale));
    outputs.push_back(MatMul(ctx.Drop(weights), SliceCols(v, at, head_dim)));
  }
  if (heads == 1) return outputs.front();
  return ConcatCols(outputs);
}

Matrix SinusoidalEncoding(std::span<const double> positions, int dim,
                          double scale) {
  if (dim <= 0 || dim % 2 != 0) {
    throw std::invalid_argument("sinusoidal encoding width must be even, got " +
                                std::to_string(dim));
  }
  Matrix out(static_cast<Eigen::Index>(positions.size()), dim);
  for (size_t i = 0; i < positions.size(); ++i) {
    const double x = scale * positions[i];
    for (int k = 0; k < dim / 2; ++k) {
      const double freq =
          std::pow(kPositionTemperature, 2.0 * k / static_cast<double>(dim));
      out(static_cast<Eigen::Index>(i), 2 * k) = std::sin(x / freq);
      out(static_cast<Eigen::Index>(i), 2 * k + 1) = std::cos(x / freq);
    }
  }
  return out;
}

Var SinusoidalEncoding(const Var& positions, int dim, double scale) {
  if (positions.cols() != 1) {
    throw std::invalid_argument("positions must be N x 1");
  }
  std::vector<double> pos(positions.value().data(),
                          positions.value().data() + positions.rows());
  Matrix out = SinusoidalEncoding(pos, dim, scale);
  return positions.graph()->Record(
      std::move(out), {positions},
      [positions, dim, scale](Graph& g, const Matrix& y, const Matrix& gy) {
        Matrix gp = Matrix::Zero(positions.rows(), 1);
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
          double acc = 0.0;
          for (int k = 0; k < dim / 2; ++k) {
            const double rate =
                scale / std::pow(kPositionTemperature,
                                 2.0 * k / static_cast<double>(dim));
            // d sin = rate * cos, d cos = -rate * sin
            acc += gy(i, 2 * k) * rate * y(i, 2 * k + 1) -
                   gy(i, 2 * k + 1) * rate * y(i, 2 * k);
          }
          gp(i, 0) = acc;
        }
        g.Accumulate(positions, gp);
      });
}

}  // namespace bam
