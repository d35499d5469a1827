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

#include <gtest/gtest.h>

#include <cmath>

#include "bam/encoder.h"
#include "bam/layers.h"
#include "bam/ops.h"
#include "support/fixtures.h"
#include "support/gradcheck.h"
#include "support/oracles.h"

namespace bam {
namespace {

using testing::RandomMatrix;

DecoderOptions Options(int d, int heads, int m, int k, int layers) {
  DecoderOptions o;
  o.model_dim = d;
  o.heads = heads;
  o.queries = m;
  o.sample_points = k;
  o.layers = layers;
  o.ffn_hidden = 2 * d;
  return o;
}

struct DecoderFixture {
  ParameterStore store;
  Rng init{21};
  Decoder decoder;
  explicit DecoderFixture(const DecoderOptions& o) : decoder(store, o, init) {}
  Parameter& P(const std::string& name) {
    Parameter* p = store.Find(name);
    if (p == nullptr) throw std::runtime_error("no parameter " + name);
    return *p;
  }
  Matrix Apply(const std::string& linear, const Matrix& x) {
    return testing::OracleAffine(x, P(linear + ".weight").value,
                                 P(linear + ".bias").value);
  }
};

MemoryBank MakeMemory(Graph& g, const Matrix& memory) {
  MemoryBank bank;
  bank.memory = g.Constant(memory);
  bank.clip_positions = ClipPositions(static_cast<int>(memory.rows()));
  bank.positional_enc =
      SinusoidalEncoding(bank.clip_positions, static_cast<int>(memory.cols()));
  return bank;
}

Var Column(Graph& g, std::vector<double> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), 1);
  for (size_t i = 0; i < values.size(); ++i) m(i, 0) = values[i];
  return g.Constant(m);
}

DecoderState StateFrom(Graph& g, const Matrix& c, std::vector<double> p,
                       std::vector<double> ds, std::vector<double> de) {
  DecoderState s;
  s.anchor_queries = g.Constant(c);
  s.start_queries = g.Constant(c);
  s.end_queries = g.Constant(c);
  s.anchor = Column(g, std::move(p));
  s.start_distance = Column(g, std::move(ds));
  s.end_distance = Column(g, std::move(de));
  return s;
}

TEST(AnchorSelfAttention, SingleQuery) {
  DecoderFixture f(Options(8, 2, 1, 2, 1));
  Rng rng(1);
  Graph g(false);
  ForwardContext ctx{g};
  const Matrix c = RandomMatrix(1, 8, rng);
  Var out = f.decoder.AnchorSelfAttention(ctx, 0,
                                          StateFrom(g, c, {0.4}, {0.1}, {0.2}));
  const std::string a = "decoder.layer0.self_attn.";
  const Matrix expected = c + f.Apply(a + "o", f.Apply(a + "v", c));
  EXPECT_LT((out.value() - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AnchorSelfAttention, MatchesOracleAndIsPermutationEquivariant) {
  DecoderFixture f(Options(8, 2, 3, 2, 1));
  Rng rng(2);
  const Matrix c = RandomMatrix(3, 8, rng);
  const std::vector<double> p = {0.2, 0.5, 0.7}, ds = {0.1, 0.05, 0.2},
                            de = {0.05, 0.3, 0.1};
  Graph g(false);
  ForwardContext ctx{g};
  Var out = f.decoder.AnchorSelfAttention(ctx, 0, StateFrom(g, c, p, ds, de));

  Matrix pe(3, 24);
  pe << SinusoidalEncoding(p, 8), SinusoidalEncoding(ds, 8),
      SinusoidalEncoding(de, 8);
  const std::string e = "decoder.layer0.span_embed.";
  const Matrix span_pos =
      f.Apply(e + "1", f.Apply(e + "0", pe).cwiseMax(0.0));
  const std::string a = "decoder.layer0.self_attn.";
  const Matrix attended = testing::OracleAttention(
      f.Apply(a + "q", c) + span_pos, f.Apply(a + "k", c) + span_pos,
      f.Apply(a + "v", c), 2);
  const Matrix expected = c + f.Apply(a + "o", attended);
  EXPECT_LT((out.value() - expected).cwiseAbs().maxCoeff(), 1e-10);

  const int perm[3] = {2, 0, 1};
  Matrix cp(3, 8);
  std::vector<double> pp(3), dsp(3), dep(3);
  for (int i = 0; i < 3; ++i) {
    cp.row(i) = c.row(perm[i]);
    pp[i] = p[perm[i]];
    dsp[i] = ds[perm[i]];
    dep[i] = de[perm[i]];
  }
  Var permuted =
      f.decoder.AnchorSelfAttention(ctx, 0, StateFrom(g, cp, pp, dsp, dep));
  for (int i = 0; i < 3; ++i) {
    EXPECT_LT((permuted.value().row(i) - out.value().row(perm[i]))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-12);
  }
}

TEST(AnchorCrossAttention, SingleClipBroadcastsValue) {
  DecoderFixture f(Options(8, 2, 3, 2, 1));
  Rng rng(3);
  Graph g(false);
  ForwardContext ctx{g};
  const Matrix c = RandomMatrix(3, 8, rng), mem = RandomMatrix(1, 8, rng);
  Var out = f.decoder.AnchorCrossAttention(ctx, 0, g.Constant(c),
                                           Column(g, {0.1, 0.5, 0.9}),
                                           MakeMemory(g, mem));
  const std::string a = "decoder.layer0.cross_attn.";
  const Matrix value = f.Apply(a + "o", f.Apply(a + "v", mem));
  for (int i = 0; i < 3; ++i) {
    EXPECT_LT((out.value().row(i) - c.row(i) - value.row(0)).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

void CheckCrossAttentionOracle(int heads) {
  DecoderFixture f(Options(8, heads, 2, 2, 1));
  Rng rng(4);
  const Matrix c = RandomMatrix(2, 8, rng), mem = RandomMatrix(3, 8, rng);
  const std::vector<double> p = {0.3, 0.8};
  Graph g(false);
  ForwardContext ctx{g};
  const MemoryBank bank = MakeMemory(g, mem);
  Var out = f.decoder.AnchorCrossAttention(ctx, 0, g.Constant(c), Column(g, p),
                                           bank);
  const std::string a = "decoder.layer0.cross_attn.";
  const Matrix q_pos = SinusoidalEncoding(p, 8);
  const Matrix attended = testing::OracleAttention(
      f.Apply(a + "q", c), f.Apply(a + "k", mem), f.Apply(a + "v", mem), heads,
      &q_pos, &bank.positional_enc);
  const Matrix expected = c + f.Apply(a + "o", attended);
  EXPECT_LT((out.value() - expected).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(AnchorCrossAttention, ConcatenatedScaleOneHead) {
  // With one head the logits are [Q || PE(p)] . [K || PE(t)] / sqrt(2D).
  CheckCrossAttentionOracle(1);
}

TEST(AnchorCrossAttention, ConcatenatedScaleTwoHeads) {
  CheckCrossAttentionOracle(2);
}

TEST(AnchorCrossAttention, ScaleIsNotSqrtD) {
  // Guard against the single-width scale: the oracle with width D must differ.
  DecoderFixture f(Options(8, 1, 2, 2, 1));
  Rng rng(5);
  const Matrix c = RandomMatrix(2, 8, rng, 3.0), mem = RandomMatrix(3, 8, rng, 3.0);
  const std::vector<double> p = {0.3, 0.8};
  Graph g(false);
  ForwardContext ctx{g};
  const MemoryBank bank = MakeMemory(g, mem);
  Var out = f.decoder.AnchorCrossAttention(ctx, 0, g.Constant(c), Column(g, p),
                                           bank);
  const std::string a = "decoder.layer0.cross_attn.";
  const Matrix q = f.Apply(a + "q", c), k = f.Apply(a + "k", mem);
  Matrix qc(2, 16), kc(3, 16);
  qc << q, SinusoidalEncoding(p, 8);
  kc << k, bank.positional_enc;
  // Concatenated width 16 with a single head, scaled as if width were 8.
  const Matrix wrong_logits = qc * kc.transpose() / std::sqrt(8.0);
  Matrix w = (wrong_logits.array().colwise() - wrong_logits.rowwise().maxCoeff().array()).exp();
  for (int i = 0; i < 2; ++i) w.row(i) /= w.row(i).sum();
  const Matrix wrong = c + f.Apply(a + "o", w * f.Apply(a + "v", mem));
  EXPECT_GT((out.value() - wrong).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(SigmoidRefine, Examples) {
  Graph g(false);
  EXPECT_NEAR(SigmoidRefine(Column(g, {0.3}), Column(g, {0.0})).scalar(), 0.3,
              1e-12);
  EXPECT_NEAR(
      SigmoidRefine(Column(g, {0.5}), Column(g, {std::log(3.0)})).scalar(),
      0.75, 1e-12);
  EXPECT_NEAR(
      SigmoidRefine(Column(g, {0.5}), Column(g, {-std::log(3.0)})).scalar(),
      0.25, 1e-12);
  for (double d : {-50.0, -3.0, 0.0, 3.0, 30.0}) {
    for (double p : {0.0, 1e-9, 0.5, 1.0}) {
      const double v = SigmoidRefine(Column(g, {p}), Column(g, {d})).scalar();
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      EXPECT_TRUE(std::isfinite(v));
    }
  }
}

TEST(SigmoidRefine, ClipsSaturatedInputs) {
  Graph g(false);
  EXPECT_NEAR(SigmoidRefine(Column(g, {0.0}), Column(g, {0.0})).scalar(), 1e-6,
              1e-15);
  EXPECT_NEAR(SigmoidRefine(Column(g, {1.0}), Column(g, {0.0})).scalar(),
              1.0 - 1e-6, 1e-15);
}

TEST(RefineAnchor, ZeroInitialDeltaKeepsAnchor) {
  DecoderFixture f(Options(8, 2, 3, 2, 1));
  Rng rng(6);
  Graph g(false);
  ForwardContext ctx{g};
  Var p = Column(g, {0.2, 0.6, 0.9});
  Var out = f.decoder.RefineAnchor(ctx, 0, g.Constant(RandomMatrix(3, 8, rng)), p);
  EXPECT_LT((out.value() - p.value()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildLocalityMemory, ShapesAndRange) {
  DecoderFixture f(Options(8, 2, 3, 2, 1));
  Rng rng(7);
  Graph g(false);
  ForwardContext ctx{g};
  const LocalityMemory loc =
      f.decoder.BuildLocalityMemory(ctx, MakeMemory(g, RandomMatrix(9, 8, rng, 4.0)));
  EXPECT_EQ(loc.start_enhanced.rows(), 9);
  EXPECT_EQ(loc.start_enhanced.cols(), 16);
  EXPECT_EQ(loc.end_enhanced.cols(), 16);
  EXPECT_EQ(loc.start_activation.rows(), 9);
  EXPECT_EQ(loc.start_activation.cols(), 1);
  for (const Var* a : {&loc.start_activation, &loc.end_activation}) {
    EXPECT_GT(a->value().minCoeff(), 0.0);
    EXPECT_LT(a->value().maxCoeff(), 1.0);
  }
}

TEST(BuildLocalityMemory, ZeroConvGivesHalfActivation) {
  DecoderFixture f(Options(8, 2, 3, 2, 1));
  for (Parameter* p : f.store.All()) {
    if (p->name.find("_conv") != std::string::npos) p->value.setZero();
  }
  Rng rng(8);
  Graph g(false);
  ForwardContext ctx{g};
  const LocalityMemory loc =
      f.decoder.BuildLocalityMemory(ctx, MakeMemory(g, RandomMatrix(5, 8, rng)));
  EXPECT_EQ(loc.start_activation.value(), Matrix::Constant(5, 1, 0.5));
  EXPECT_EQ(loc.end_activation.value(), Matrix::Constant(5, 1, 0.5));
}

TEST(BuildLocalityMemory, ConvMatchesLoopOracle) {
  DecoderFixture f(Options(4, 2, 3, 2, 1));
  Rng rng(9);
  const Matrix mem = RandomMatrix(6, 4, rng);
  Graph g(false);
  ForwardContext ctx{g};
  const LocalityMemory loc = f.decoder.BuildLocalityMemory(ctx, MakeMemory(g, mem));
  // Kernel-3 convolution, zero padded: tap t reads row i + t - 1.
  auto conv = [&](const std::string& name, const Matrix& x) {
    const Matrix& w = f.P(name + ".weight").value;  // (3 * D_in) x D_out
    const Matrix& b = f.P(name + ".bias").value;
    const int n = static_cast<int>(x.rows()), din = static_cast<int>(x.cols());
    Matrix out(n, w.cols());
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < w.cols(); ++o) {
        double s = b(0, o);
        for (int t = 0; t < 3; ++t) {
          const int r = i + t - 1;
          if (r < 0 || r >= n) continue;
          for (int c = 0; c < din; ++c) s += x(r, c) * w(t * din + c, o);
        }
        out(i, o) = s;
      }
    }
    return out;
  };
  const Matrix vs =
      conv("decoder.start_conv1", conv("decoder.start_conv0", mem).cwiseMax(0.0));
  EXPECT_LT((loc.start_features.value() - vs).cwiseAbs().maxCoeff(), 1e-12);
  Matrix expected(6, 8);
  expected << mem, vs;
  EXPECT_LT((loc.start_enhanced.value() - expected).cwiseAbs().maxCoeff(), 1e-12);
  const Matrix act = (1.0 / (1.0 + (-vs.array()).exp())).rowwise().mean();
  EXPECT_LT((loc.start_activation.value() - act).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BoundaryLabels, RadiusIsTenthOfLengthInclusive) {
  // 11 clips at positions 0, 0.1, ..., 1; GT [0.2, 0.7] has radius 0.05.
  const std::vector<double> pos = ClipPositions(11);
  const std::vector<MomentSpan> gts = {{0.2, 0.7}};
  const BoundaryLabels l = MakeBoundaryLabels(gts, pos);
  for (int i = 0; i < 11; ++i) {
    EXPECT_EQ(l.start[i], i == 2 ? 1.0 : 0.0) << i;
    EXPECT_EQ(l.end[i], i == 7 ? 1.0 : 0.0) << i;
  }
  // A long GT [0, 1] has radius 0.1 and covers the neighbours too.
  const std::vector<MomentSpan> whole = {{0.0, 1.0}};
  const std::vector<double> grid = {0.0, 0.1, 0.2, 0.5, 0.9, 1.0};
  const BoundaryLabels w = MakeBoundaryLabels(whole, grid);
  EXPECT_EQ(w.start, (std::vector<double>{1, 1, 0, 0, 0, 0}));
  EXPECT_EQ(w.end, (std::vector<double>{0, 0, 0, 0, 1, 1}));
}

TEST(BoundaryRegularizationLoss, Examples) {
  Graph g(false);
  BoundaryLabels labels{{1, 0, 0}, {0, 0, 1}};
  EXPECT_NEAR(BoundaryRegularizationLoss(Column(g, {1, 0, 0}),
                                         Column(g, {0, 0, 1}), labels)
                  .scalar(),
              0.0, 1e-5);
  EXPECT_NEAR(BoundaryRegularizationLoss(Column(g, {0.5, 0.5, 0.5}),
                                         Column(g, {0.5, 0.5, 0.5}), labels)
                  .scalar(),
              2 * std::log(2.0), 1e-12);
  double prev = 1e9;
  for (double v : {0.1, 0.3, 0.6, 0.9}) {
    const double l = BoundaryRegularizationLoss(Column(g, {v, 0.2, 0.2}),
                                                Column(g, {0.2, 0.2, 0.7}), labels)
                         .scalar();
    EXPECT_LT(l, prev);
    prev = l;
  }
  const double worst = BoundaryRegularizationLoss(
                           Column(g, {0, 1, 1}), Column(g, {1, 1, 0}), labels)
                           .scalar();
  EXPECT_TRUE(std::isfinite(worst));
}

TEST(SampleMemory, InterpolationCases) {
  Graph g(false);
  Matrix mem(5, 2);
  for (int i = 0; i < 5; ++i) mem.row(i).setConstant(i);
  Var m = g.Constant(mem);
  Var out = InterpolateRows(m, Column(g, {0.5, 2.5 / 4.0, -0.2, 1.3}));
  EXPECT_EQ(out.value()(0, 0), 2.0);
  EXPECT_NEAR(out.value()(1, 1), 2.5, 1e-12);
  EXPECT_EQ(out.value()(2, 0), 0.0);
  EXPECT_EQ(out.value()(3, 0), 4.0);
}

TEST(BoundaryFocusedAttention, MatchesWeightedInterpolationOracle) {
  DecoderFixture f(Options(4, 2, 2, 3, 1));
  Rng rng(10);
  // Spread the offsets so samples land between clips.
  f.P("decoder.layer0.start.offsets.weight").value = RandomMatrix(4, 3, rng, 0.2);
  const Matrix c = RandomMatrix(2, 4, rng);
  const Matrix enhanced = RandomMatrix(7, 8, rng);
  const std::vector<double> origin = {0.31, 0.77};
  Graph g(false);
  ForwardContext ctx{g};
  const auto out = f.decoder.BoundaryFocusedAttention(
      ctx, 0, Boundary::kStart, g.Constant(c), Column(g, origin),
      g.Constant(enhanced));
  const std::string s = "decoder.layer0.start.";
  const Matrix offsets = f.Apply(s + "offsets", c);
  const Matrix logits = f.Apply(s + "weights", c);
  const Matrix& pw = f.P(s + "project.weight").value;
  const Matrix& pb = f.P(s + "project.bias").value;
  for (int m = 0; m < 2; ++m) {
    double z = 0.0;
    for (int k = 0; k < 3; ++k) z += std::exp(logits(m, k));
    std::vector<double> agg(8, 0.0);
    for (int k = 0; k < 3; ++k) {
      const double w = std::exp(logits(m, k)) / z;
      EXPECT_NEAR(out.weights(m, k), w, 1e-12);
      EXPECT_NEAR(out.offsets(m, k), offsets(m, k), 1e-12);
      const auto row = testing::OracleSampleRow(enhanced, origin[m] + offsets(m, k));
      for (int c2 = 0; c2 < 8; ++c2) agg[c2] += w * row[c2];
    }
    for (int j = 0; j < 4; ++j) {
      double v = pb(0, j) + c(m, j);
      for (int c2 = 0; c2 < 8; ++c2) v += agg[c2] * pw(c2, j);
      EXPECT_NEAR(out.queries.value()(m, j), v, 1e-6);
    }
  }
}

TEST(BoundaryFocusedAttention, SinglePointAndConstantMemory) {
  DecoderFixture f(Options(4, 2, 3, 1, 1));
  Rng rng(11);
  const Matrix c = RandomMatrix(3, 4, rng);
  Matrix enhanced(6, 8);
  const Matrix row = RandomMatrix(1, 8, rng);
  for (int i = 0; i < 6; ++i) enhanced.row(i) = row;
  Graph g(false);
  ForwardContext ctx{g};
  const auto out = f.decoder.BoundaryFocusedAttention(
      ctx, 0, Boundary::kEnd, g.Constant(c), Column(g, {0.1, 0.5, 0.95}),
      g.Constant(enhanced));
  EXPECT_EQ(out.weights, Matrix::Ones(3, 1));
  const Matrix proj = f.Apply("decoder.layer0.end.project", row);
  for (int m = 0; m < 3; ++m) {
    EXPECT_LT((out.queries.value().row(m) - c.row(m) - proj.row(0)).cwiseAbs().maxCoeff(),
              1e-12);
  }
}

TEST(Decode, ZeroLayersReturnsSigmoidOfInitialSpans) {
  DecoderFixture f(Options(8, 2, 4, 2, 0));
  Rng rng(12);
  f.decoder.initial_span_logits().value = RandomMatrix(4, 3, rng);
  Graph g(false);
  ForwardContext ctx{g};
  const MemoryBank bank = MakeMemory(g, RandomMatrix(5, 8, rng));
  const DecodeResult r =
      f.decoder.Decode(ctx, bank, f.decoder.BuildLocalityMemory(ctx, bank));
  EXPECT_TRUE(r.layers.empty());
  const Matrix expected =
      (1.0 / (1.0 + (-f.decoder.initial_span_logits().value.array()).exp())).matrix();
  EXPECT_LT((r.Final().Predictions() - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Decode, InitialAnchorsSpreadAndSmallWidths) {
  DecoderFixture f(Options(8, 2, 4, 2, 0));
  Graph g(false);
  ForwardContext ctx{g};
  const DecoderState s = f.decoder.InitialState(ctx);
  for (int m = 0; m < 4; ++m) {
    EXPECT_NEAR(s.anchor.value()(m, 0), (m + 0.5) / 4, 1e-12);
    EXPECT_NEAR(s.start_distance.value()(m, 0), 0.05, 1e-12);
    EXPECT_NEAR(s.end_distance.value()(m, 0), 0.05, 1e-12);
  }
}

TEST(Decode, LayersValidAndSpansFollowTriplets) {
  DecoderFixture f(Options(8, 2, 5, 3, 2));
  Rng rng(13);
  testing::Perturb(f.store, rng, 0.3);
  Graph g(false);
  ForwardContext ctx{g};
  const MemoryBank bank = MakeMemory(g, RandomMatrix(10, 8, rng));
  const DecodeResult r =
      f.decoder.Decode(ctx, bank, f.decoder.BuildLocalityMemory(ctx, bank));
  ASSERT_EQ(r.layers.size(), 2u);
  for (const DecoderState& s : r.layers) {
    const Matrix a = s.Predictions();
    EXPECT_EQ(a.rows(), 5);
    EXPECT_EQ(a.cols(), 3);
    EXPECT_GT(a.minCoeff(), 0.0);
    EXPECT_LT(a.maxCoeff(), 1.0);
    EXPECT_EQ(s.start_offsets.rows(), 5);
    EXPECT_EQ(s.start_offsets.cols(), 3);
  }
  const auto spans = r.Final().Spans();
  for (int m = 0; m < 5; ++m) {
    EXPECT_EQ(spans[m], TripletToSpan(r.Final().Triplet(m)));
  }
}

TEST(Decode, BoundaryOriginUsesUpdatedAnchor) {
  DecoderFixture f(Options(8, 2, 3, 2, 1));
  Rng rng(14);
  testing::Perturb(f.store, rng, 0.3);
  Graph g(false);
  ForwardContext ctx{g};
  const MemoryBank bank = MakeMemory(g, RandomMatrix(8, 8, rng));
  const LocalityMemory loc = f.decoder.BuildLocalityMemory(ctx, bank);
  const DecodeResult r = f.decoder.Decode(ctx, bank, loc);
  const DecoderState& s0 = r.initial;
  Var c = f.decoder.AnchorSelfAttention(ctx, 0, s0);
  c = f.decoder.AnchorCrossAttention(ctx, 0, c, s0.anchor, bank);
  c = f.decoder.AnchorFeedForward(ctx, 0, c);
  Var p1 = f.decoder.RefineAnchor(ctx, 0, c, s0.anchor);
  EXPECT_LT((p1.value() - r.layers[0].anchor.value()).cwiseAbs().maxCoeff(), 1e-12);
  // p1 differs from p0, so using the stale anchor would change the offsets'
  // sampled positions and the resulting start distance.
  EXPECT_GT((p1.value() - s0.anchor.value()).cwiseAbs().maxCoeff(), 1e-6);
  const auto fresh = f.decoder.BoundaryFocusedAttention(
      ctx, 0, Boundary::kStart, s0.start_queries, p1 - s0.start_distance,
      loc.start_enhanced);
  Var ds = f.decoder.RefineBoundary(
      ctx, 0, Boundary::kStart,
      f.decoder.BoundaryFeedForward(ctx, 0, Boundary::kStart, fresh.queries),
      s0.start_distance);
  EXPECT_LT((ds.value() - r.layers[0].start_distance.value()).cwiseAbs().maxCoeff(),
            1e-12);
}

TEST(Decoder, GradientMatchesFiniteDifferences) {
  DecoderFixture f(Options(8, 2, 3, 2, 2));
  Rng rng(15);
  testing::Perturb(f.store, rng, 0.2);
  const Matrix mem = RandomMatrix(10, 8, rng);
  const Matrix w = RandomMatrix(3, 3, rng);
  const std::vector<MomentSpan> gts = {{0.2, 0.5}};
  auto build = [&](Graph& g) {
    ForwardContext ctx{g};
    const MemoryBank bank = MakeMemory(g, mem);
    const LocalityMemory loc = f.decoder.BuildLocalityMemory(ctx, bank);
    const DecodeResult r = f.decoder.Decode(ctx, bank, loc);
    Var total = BoundaryRegularizationLoss(
        loc.start_activation, loc.end_activation,
        MakeBoundaryLabels(gts, bank.clip_positions));
    for (const DecoderState& s : r.layers) {
      total = total + Sum(Mul(ConcatCols({s.anchor, s.start_distance,
                                          s.end_distance}),
                              g.Constant(w))) +
              Scale(Sum(Mul(s.anchor_queries, s.start_queries)), 0.1) +
              Scale(Sum(s.end_queries), 0.1);
    }
    return total;
  };
  auto loss = [&] {
    Graph g(false);
    return build(g).scalar();
  };
  auto analytic = [&] {
    Graph g(true);
    g.Backward(build(g));
    g.ExportParameterGrads();
  };
  const auto errors = testing::CheckGradients(f.store, loss, analytic, 1e-5, 25, rng);
  for (const auto& e : errors) EXPECT_LT(e.relative_error, 1e-4) << e.name;
}

}  // namespace
}  // namespace bam
