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

#ifndef BAM_RANDOM_H_
#define BAM_RANDOM_H_

#include <cstdint>
#include <initializer_list>

namespace bam {

// Portable deterministic generator (splitmix64). Distributions are computed
// here rather than through <random> so streams are identical across standard
// library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  uint64_t NextU64();
  // Uniform in [0, 1).
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [lo, hi].
  int UniformInt(int lo, int hi);
  double Normal();

  uint64_t state() const { return state_; }

  // Derives an independent stream from a base seed and a tuple of indices.
  static Rng Derive(uint64_t seed, std::initializer_list<uint64_t> keys);

 private:
  uint64_t state_;
};

}  // namespace bam

#endif  // BAM_RANDOM_H_
