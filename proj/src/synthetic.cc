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

#include "bam/synthetic.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "bam/random.h"

namespace bam {
namespace {

Eigen::RowVectorXd RandomPattern(Rng& rng, int dim) {
  Eigen::RowVectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.Normal();
  return v;
}

double ToFloat(double x) { return static_cast<double>(static_cast<float>(x)); }

struct Segment {
  int first = 0;  // inclusive clip indices
  int last = 0;
};

bool Overlaps(const Segment& a, const Segment& b, int gap) {
  return a.first <= b.last + gap && b.first <= a.last + gap;
}

}  // namespace

Dataset GenerateSynthetic(int n_samples, uint64_t seed,
                          const SyntheticOptions& o) {
  if (o.min_clips < 8 || o.max_clips < o.min_clips) {
    throw std::invalid_argument("synthetic: need 8 <= min_clips <= max_clips");
  }
  if (o.min_moments < 1 || o.max_moments > 3 ||
      o.max_moments < o.min_moments) {
    throw std::invalid_argument("synthetic: moments must be within 1..3");
  }
  Dataset ds;
  ds.name = "synthetic";
  ds.split = "train";

  // Shared pattern -> text embedding map.
  Rng map_rng = Rng::Derive(seed, {0xA11CE});
  Matrix text_map(o.video_dim, o.text_dim);
  for (Eigen::Index i = 0; i < text_map.size(); ++i) {
    text_map.data()[i] = map_rng.Normal() / std::sqrt(o.video_dim);
  }

  for (int n = 0; n < n_samples; ++n) {
    Rng rng = Rng::Derive(seed, {static_cast<uint64_t>(n)});
    Sample s;
    s.qid = "syn" + std::to_string(n);
    s.vid = "vid" + std::to_string(n);
    const int clips = rng.UniformInt(o.min_clips, o.max_clips);
    s.duration = clips * o.clip_stride;
    const int moments = rng.UniformInt(o.min_moments, o.max_moments);

    const int min_len = std::max(3, static_cast<int>(o.min_moment_fraction * clips));
    const int max_len =
        std::max(min_len, static_cast<int>(o.max_moment_fraction * clips));
    std::vector<Segment> segs;
    for (int tries = 0; static_cast<int>(segs.size()) < moments && tries < 1000;
         ++tries) {
      const int len = rng.UniformInt(min_len, max_len);
      const int first = rng.UniformInt(0, clips - len);
      Segment cand{first, first + len - 1};
      bool ok = true;
      for (const Segment& other : segs) ok = ok && !Overlaps(cand, other, 2);
      if (ok) segs.push_back(cand);
    }
    std::sort(segs.begin(), segs.end(),
              [](const Segment& a, const Segment& b) { return a.first < b.first; });

    const Eigen::RowVectorXd pattern = RandomPattern(rng, o.video_dim);
    Matrix video(clips, o.video_dim);
    for (Eigen::Index i = 0; i < video.size(); ++i) {
      video.data()[i] = o.noise * rng.Normal();
    }
    std::vector<double> labels(static_cast<size_t>(clips), 0.0);
    for (const Segment& seg : segs) {
      const bool dip = rng.Uniform() < o.dip_probability;
      const int len = seg.last - seg.first + 1;
      for (int c = seg.first; c <= seg.last; ++c) {
        const bool in_dip = dip && c >= seg.first + len / 3 &&
                            c <= seg.last - len / 3;
        const double strength = in_dip ? o.dip_strength : 1.0;
        video.row(c) += strength * pattern;
        labels[c] = in_dip ? 0.5 : 1.0;
      }
      s.gt_spans.push_back(
          {static_cast<double>(seg.first) / (clips - 1),
           static_cast<double>(seg.last) / (clips - 1)});
    }
    if (o.distractor) {
      const Eigen::RowVectorXd other = RandomPattern(rng, o.video_dim);
      const int len = rng.UniformInt(min_len, max_len);
      for (int tries = 0; tries < 100; ++tries) {
        const int first = rng.UniformInt(0, clips - len);
        Segment cand{first, first + len - 1};
        bool ok = true;
        for (const Segment& seg : segs) ok = ok && !Overlaps(cand, seg, 2);
        if (!ok) continue;
        for (int c = cand.first; c <= cand.last; ++c) video.row(c) += other;
        break;
      }
    }

    const int tokens = rng.UniformInt(o.min_tokens, o.max_tokens);
    Matrix text(tokens, o.text_dim);
    const Eigen::RowVectorXd embedded = pattern * text_map;
    for (int t = 0; t < tokens; ++t) {
      for (int j = 0; j < o.text_dim; ++j) {
        text(t, j) = embedded(j) + o.noise * rng.Normal();
      }
    }

    s.video_feats = video.unaryExpr(&ToFloat);
    s.text_feats = text.unaryExpr(&ToFloat);
    s.saliency_labels = std::move(labels);
    ds.samples.push_back(std::move(s));
  }
  ds.Validate();
  return ds;
}

}  // namespace bam
