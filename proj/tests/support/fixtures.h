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

// Small hand-built samples and configs shared by the test binaries.

#ifndef BAM_TESTS_SUPPORT_FIXTURES_H_
#define BAM_TESTS_SUPPORT_FIXTURES_H_

#include <optional>
#include <string>
#include <vector>

#include "bam/config.h"
#include "bam/encoder.h"
#include "bam/model.h"
#include "bam/ops.h"
#include "bam/random.h"

namespace bam::testing {

inline Matrix RandomMatrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.Normal();
  return m;
}

// Random features; GT spans and labels as given.
inline Sample MakeSample(const std::string& qid, int n_v, int n_t, int dv,
                         int dt, std::vector<MomentSpan> gts,
                         std::optional<std::vector<double>> labels, Rng& rng) {
  Sample s;
  s.qid = qid;
  s.vid = "v_" + qid;
  s.video_feats = RandomMatrix(n_v, dv, rng);
  s.text_feats = RandomMatrix(n_t, dt, rng);
  s.gt_spans = std::move(gts);
  s.saliency_labels = std::move(labels);
  s.duration = 2.0 * n_v;
  return s;
}

// D=16, H=2, L_E=L_D=1, M=3, K=2, dropout off, quality target not detached.
inline Config TinyConfig() {
  Config c;
  c.D = 16;
  c.heads = 2;
  c.L_E = 1;
  c.L_D = 1;
  c.M = 3;
  c.K = 2;
  c.dropout = 0.0;
  c.detach_quality_target = false;
  c.batch = 2;
  return c;
}

// Adds N(0, scale^2) noise to every parameter so no path starts at zero.
inline void Perturb(ParameterStore& store, Rng& rng, double scale) {
  for (Parameter* p : store.All()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      p->value.data()[i] += scale * rng.Normal();
    }
  }
}

// Mean total loss over `batch`, each sample paired with the next one as its
// negative sentence. Pair sampling streams are fixed by `pair_seed`.
inline Var BatchLoss(const Model& model, Graph& graph,
                     const std::vector<Sample>& batch, uint64_t pair_seed) {
  ForwardContext ctx{graph, false, 0.0, nullptr};
  Var total;
  const int n = static_cast<int>(batch.size());
  for (int i = 0; i < n; ++i) {
    Rng pair_rng = Rng::Derive(pair_seed, {static_cast<uint64_t>(i)});
    const Sample* negative = n > 1 ? &batch[(i + 1) % n] : nullptr;
    Var l = model.Loss(ctx, batch[i], negative, pair_rng).total;
    total = total.valid() ? total + l : l;
  }
  return Scale(total, 1.0 / n);
}

}  // namespace bam::testing

#endif  // BAM_TESTS_SUPPORT_FIXTURES_H_
