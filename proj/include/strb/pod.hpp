// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "strb/common.hpp"
#include "strb/hifi.hpp"
#include "strb/wspace.hpp"

namespace strb {

/// W_d-orthonormal modes with their lifts and the correlation eigenvalues.
struct PodResult {
  Mat basis_y;      // N*M x L_retained
  Mat basis_lift;   // N*P x L_retained
  Vec eigenvalues;  // all ell eigenvalues, nonincreasing, clamped at 0
  int retained = 0;

  int L() const { return retained; }
};

/// Space-time POD by the method of snapshots in the W_d inner product:
/// eigendecomposition of K_ij = (s_i, s_j)_{W_d} / ell, modes j with
/// lambda_j <= eps_rank * lambda_1 dropped. Lifts combine linearly, so the
/// lifted basis is the same combination of the snapshot lifts.
inline PodResult pod(const std::vector<Snapshot>& snapshots, int L, const WGram& gram,
                     double eps_rank = 1e-12) {
  const int ell = static_cast<int>(snapshots.size());
  require(ell >= 1, "pod: empty snapshot list");
  require(L >= 1, "pod: retain count must be positive");
  require(L <= ell, "pod: cannot retain more modes than snapshots");

  // Correlation through precomputed Gram applications.
  Mat gd(gram.w_dim(), ell), gl(gram.q_dim(), ell);
  for (int i = 0; i < ell; ++i) {
    gd.col(i) = gram.apply_g_direct(snapshots[i].y);
    gl.col(i) = gram.apply_g_lift(snapshots[i].p_hat);
  }
  Mat corr(ell, ell);
  for (int i = 0; i < ell; ++i)
    for (int j = 0; j <= i; ++j) {
      const double v =
          (snapshots[i].y.dot(gd.col(j)) + snapshots[i].p_hat.dot(gl.col(j))) / ell;
      corr(i, j) = v;
      corr(j, i) = v;
    }

  Eigen::SelfAdjointEigenSolver<Mat> eig(corr);
  require(eig.info() == Eigen::Success, "pod: eigendecomposition failed");

  PodResult res;
  res.eigenvalues = Vec(ell);
  for (int j = 0; j < ell; ++j) {
    const double lam = eig.eigenvalues()[ell - 1 - j];  // descending
    require(lam >= -1e-12 * std::abs(eig.eigenvalues()[ell - 1]),
            "pod: correlation matrix has a significantly negative eigenvalue");
    res.eigenvalues[j] = std::max(0.0, lam);
  }
  const double lam_max = res.eigenvalues[0];
  require(lam_max > 0.0, "pod: all snapshots are zero");

  int keep = 0;
  while (keep < L && res.eigenvalues[keep] > eps_rank * lam_max) ++keep;
  res.retained = keep;

  res.basis_y.resize(gram.w_dim(), keep);
  res.basis_lift.resize(gram.q_dim(), keep);
  for (int j = 0; j < keep; ++j) {
    const Vec v = eig.eigenvectors().col(ell - 1 - j);
    const double scale = 1.0 / std::sqrt(double(ell) * res.eigenvalues[j]);
    Vec y = Vec::Zero(gram.w_dim());
    Vec lift = Vec::Zero(gram.q_dim());
    for (int i = 0; i < ell; ++i) {
      y += v[i] * snapshots[i].y;
      lift += v[i] * snapshots[i].p_hat;
    }
    res.basis_y.col(j) = scale * y;
    res.basis_lift.col(j) = scale * lift;
  }
  return res;
}

}  // namespace strb
