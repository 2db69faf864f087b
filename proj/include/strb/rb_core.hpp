// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>
#include <vector>

#include "strb/common.hpp"
#include "strb/pod.hpp"
#include "strb/problem.hpp"
#include "strb/wspace.hpp"

namespace strb {

/// Reduced trial and test bases. Column l of B_Q is the reference lift of
/// column l of B_W; this coupling is what makes the W_d inner product of
/// reduced functions computable from the projected Gram.
struct ReducedBasis {
  Mat B_W;  // N*M x L
  Mat B_Q;  // N*P x L

  int L() const { return static_cast<int>(B_W.cols()); }
};

inline ReducedBasis basis_from_pod(const PodResult& pod_result) {
  return {pod_result.basis_y, pod_result.basis_lift};
}

/// Offline-projected reduced model: affine parts of the (2L)x(2L) saddle
/// system, the reduced W_d Gram and the affine coefficient functions. Online
/// solves touch nothing of size N, M or P.
struct ReducedModel {
  int L = 0;
  std::vector<Mat> S_parts;  // Q_S = Q_A + 1 blocks of (2L)^2
  std::vector<Vec> s_parts;  // Q_s = Q_y + Q_f vectors of 2L
  Mat G_rb;                  // L x L SPD
  AffineCoefficients coeffs;
  ProblemSpec spec;  // provenance; enough to rebuild coeffs after loading

  int Q_S() const { return static_cast<int>(S_parts.size()); }
  int Q_s() const { return static_cast<int>(s_parts.size()); }

  double theta_S(int q, const Vec& mu) const {
    return q < coeffs.Q_A() ? coeffs.A[q](mu) : 1.0;
  }
  double theta_s(int q, const Vec& mu) const {
    return q < coeffs.Q_y() ? coeffs.y0[q](mu) : coeffs.f[q - coeffs.Q_y()](mu);
  }

  Mat assemble_S(const Vec& mu) const {
    Mat s = Mat::Zero(2 * L, 2 * L);
    for (int q = 0; q < Q_S(); ++q) s += theta_S(q, mu) * S_parts[q];
    return s;
  }
  Vec assemble_s(const Vec& mu) const {
    Vec v = Vec::Zero(2 * L);
    for (int q = 0; q < Q_s(); ++q) v += theta_s(q, mu) * s_parts[q];
    return v;
  }
};

/// Projects every affine block of S_d and s_d through blockdiag(B_W, B_Q)
/// and assembles the reduced W_d Gram.
inline ReducedModel build_reduced_model(const SeparableProblem& pb,
                                        const ReducedBasis& basis,
                                        const ProblemSpec& spec = {}) {
  const int L = basis.L();
  require(L >= 1, "build_reduced_model: empty basis");
  require(basis.B_W.rows() == pb.w_dim() && basis.B_Q.rows() == pb.q_dim(),
          "build_reduced_model: basis dimensions do not match the problem");
  require(basis.B_Q.cols() == L, "build_reduced_model: B_Q must mirror B_W");

  ReducedModel model;
  model.L = L;
  model.coeffs = pb.coeffs;
  model.spec = spec;

  const SpMat mx = diagonal_sparse(pb.smat.mass_lumped);
  const SpMat mtpsi = SpMat(pb.tmat.Mt_psi);

  // q = 1..Q_A: blockdiag(M_t (x) A_x^q, -M_t^psi (x) A_x^q)
  for (int q = 0; q < pb.coeffs.Q_A(); ++q) {
    Mat s = Mat::Zero(2 * L, 2 * L);
    const KronSum top = KronSum::single(1.0, pb.tmat.Mt, pb.A_parts[q]);
    const KronSum bottom = KronSum::single(1.0, mtpsi, pb.A_parts[q]);
    s.topLeftCorner(L, L) = basis.B_W.transpose() * top.apply_mat(basis.B_W);
    s.bottomRightCorner(L, L) = -basis.B_Q.transpose() * bottom.apply_mat(basis.B_Q);
    model.S_parts.push_back(std::move(s));
  }
  // q = Q_A + 1: parameter-independent block with T_t and the Z_t couplings
  {
    Mat s = Mat::Zero(2 * L, 2 * L);
    const KronSum tt = KronSum::single(1.0, pb.tmat.Tt, mx);
    const KronSum b = KronSum::single(1.0, pb.tmat.Zt, mx);
    s.topLeftCorner(L, L) = basis.B_W.transpose() * tt.apply_mat(basis.B_W);
    const Mat coupling = basis.B_Q.transpose() * b.apply_mat(basis.B_W);  // B_Q^T (Z_t (x) M_x) B_W
    s.topRightCorner(L, L) = coupling.transpose();
    s.bottomLeftCorner(L, L) = coupling;
    model.S_parts.push_back(std::move(s));
  }

  for (int q = 0; q < pb.coeffs.Q_y(); ++q) {
    Vec v = Vec::Zero(2 * L);
    v.head(L) = basis.B_W.transpose() * kron_vector(pb.tmat.R0t, pb.R0x_parts[q]);
    model.s_parts.push_back(std::move(v));
  }
  for (int q = 0; q < pb.coeffs.Q_f(); ++q) {
    Vec v(2 * L);
    v.head(L) = basis.B_W.transpose() * pb.F1_parts[q];
    v.tail(L) = basis.B_Q.transpose() * pb.F2_parts[q];
    model.s_parts.push_back(std::move(v));
  }

  const KronSum g_direct({{1.0, pb.tmat.Tt, mx}, {1.0, pb.tmat.Mt, pb.A_ref}});
  const KronSum g_lift = KronSum::single(1.0, mtpsi, pb.A_ref);
  model.G_rb = basis.B_W.transpose() * g_direct.apply_mat(basis.B_W) +
               basis.B_Q.transpose() * g_lift.apply_mat(basis.B_Q);
  return model;
}

struct OnlineSolution {
  Vec u_y, u_p;
  double y_rb_norm = 0.0;
};

/// Dense (2L)x(2L) solve of S_rb(mu) u = s_rb(mu); cost independent of the
/// high-fidelity dimensions.
inline OnlineSolution solve_online(const ReducedModel& model, const Vec& mu) {
  require(model.coeffs.box.contains(mu, 1e-12), "parameter outside the admissible box");
  const Mat s = model.assemble_S(mu);
  const Vec rhs = model.assemble_s(mu);
  Eigen::FullPivLU<Mat> lu(s);
  if (!lu.isInvertible())
    throw SolverError("reduced saddle system is singular; the basis is degenerate", 0.0);
  const Vec u = lu.solve(rhs);
  OnlineSolution sol;
  sol.u_y = u.head(model.L);
  sol.u_p = u.tail(model.L);
  sol.y_rb_norm = std::sqrt(std::max(0.0, sol.u_y.dot(model.G_rb * sol.u_y)));
  return sol;
}

/// Reduced solution expanded to high-fidelity coefficients. The lift of y_rb
/// comes for free as B_Q u_y by linearity of the lift.
struct Reconstruction {
  Vec y;       // B_W u_y
  Vec p;       // B_Q u_p
  Vec y_lift;  // B_Q u_y
};

inline Reconstruction reconstruct(const ReducedBasis& basis, const Vec& u_y,
                                  const Vec& u_p) {
  require(u_y.size() == basis.L() && u_p.size() == basis.L(),
          "reconstruct: coefficient size mismatch");
  return {basis.B_W * u_y, basis.B_Q * u_p, basis.B_Q * u_y};
}

}  // namespace strb
