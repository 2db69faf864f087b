// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "strb/common.hpp"
#include "strb/problem.hpp"

namespace strb {

enum class Dist { Uniform, LogUniform };

/// Seeded per-component sampling plan over a parameter box.
struct SamplingSpec {
  std::vector<Dist> dist;
  ParameterBox box;
  int count = 0;
  std::uint64_t seed = 1;
};

/// The benchmark convention: log-uniform for strictly positive components,
/// plain uniform otherwise.
inline SamplingSpec default_sampling(const ParameterBox& box, int count,
                                     std::uint64_t seed) {
  SamplingSpec spec;
  spec.box = box;
  spec.count = count;
  spec.seed = seed;
  for (int i = 0; i < box.dim(); ++i)
    spec.dist.push_back(box.lo[i] > 0.0 ? Dist::LogUniform : Dist::Uniform);
  return spec;
}

inline std::vector<Vec> sample_parameters(const SamplingSpec& spec) {
  require(spec.count >= 0, "sample count must be nonnegative");
  require(static_cast<int>(spec.dist.size()) == spec.box.dim(),
          "sampling spec dimension mismatch");
  for (int i = 0; i < spec.box.dim(); ++i) {
    require(spec.box.lo[i] <= spec.box.hi[i], "sampling bounds are inverted");
    if (spec.dist[i] == Dist::LogUniform)
      require(spec.box.lo[i] > 0.0, "log-uniform components need positive bounds");
  }
  Rng rng(spec.seed);
  std::vector<Vec> out;
  out.reserve(spec.count);
  for (int s = 0; s < spec.count; ++s) {
    Vec mu(spec.box.dim());
    for (int i = 0; i < spec.box.dim(); ++i)
      mu[i] = spec.dist[i] == Dist::LogUniform
                  ? rng.log_uniform(spec.box.lo[i], spec.box.hi[i])
                  : rng.uniform(spec.box.lo[i], spec.box.hi[i]);
    out.push_back(std::move(mu));
  }
  return out;
}

/// Component-wise midpoint: geometric on log-scaled axes, arithmetic
/// otherwise. `shift` in [0, 1] moves the point toward the upper bound and
/// is used as a fallback when the midpoint yields degenerate data.
inline Vec box_midpoint(const SamplingSpec& spec, double shift = 0.5) {
  Vec mu(spec.box.dim());
  for (int i = 0; i < spec.box.dim(); ++i) {
    if (spec.dist[i] == Dist::LogUniform)
      mu[i] = std::exp(std::log(spec.box.lo[i]) +
                       shift * (std::log(spec.box.hi[i]) - std::log(spec.box.lo[i])));
    else
      mu[i] = spec.box.lo[i] + shift * (spec.box.hi[i] - spec.box.lo[i]);
  }
  return mu;
}

}  // namespace strb
