// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>

#include "strb/common.hpp"
#include "strb/kron.hpp"
#include "strb/problem.hpp"

namespace strb {

inline SpMat diagonal_sparse(const Vec& d) {
  SpMat m(d.size(), d.size());
  m.reserve(Eigen::VectorXi::Constant(static_cast<int>(d.size()), 1));
  for (Index i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
  m.makeCompressed();
  return m;
}

/// Solve (diag(tdiag) (x) A) x = w block-wise with a prefactored A.
inline Vec kron_block_solve(const Eigen::SimplicialLLT<SpMat>& llt, const Vec& tdiag,
                            const Vec& w) {
  const Index nx = llt.matrixL().rows();
  const Index nt = tdiag.size();
  require(w.size() == nx * nt, "kron_block_solve dimension mismatch");
  Eigen::Map<const Mat> wm(w.data(), nx, nt);
  Mat xm = llt.solve(wm);
  for (Index p = 0; p < nt; ++p) xm.col(p) /= tdiag[p];
  return Eigen::Map<Vec>(xm.data(), nx * nt);
}

inline Vec element_widths(const TimeGrid& grid) {
  Vec k(grid.num_elements());
  for (int p = 0; p < grid.num_elements(); ++p) k[p] = grid.width(p);
  return k;
}

/// Discrete Riesz lift at mu: (M_t^psi (x) A_x(mu))^{-1} (Z_t (x) M_x) y.
/// The factorization of A_x(mu) is supplied so it can be shared.
inline Vec lift_with(const SeparableProblem& pb, const Eigen::SimplicialLLT<SpMat>& a_llt,
                     const Vec& y) {
  const KronSum b = KronSum::single(1.0, pb.tmat.Zt, diagonal_sparse(pb.smat.mass_lumped));
  return kron_block_solve(a_llt, element_widths(pb.grid), b.apply(y));
}

/// Reference-parameter lift used by snapshots and the reduced test basis.
inline Vec lift_reference(const SeparableProblem& pb, const Vec& y) {
  return lift_with(pb, *pb.A_ref_llt, y);
}

struct WGramOptions {
  SaddleOptions saddle;  // used for the Gram solves
  WGramOptions() { saddle.method = SaddleMethod::Direct; }
};

/// The W_d inner product at the reference parameter and its Gram solves.
///
/// (u, v)_{W_d} = u^T (T_t (x) M_x + M_t (x) A_x(mu_bar)) v
///              + u_hat^T (M_t^psi (x) A_x(mu_bar)) v_hat
/// with u_hat, v_hat the reference lifts. The Gram matrix G of the W_d basis
/// equals the Schur complement of the mu_bar saddle operator, so G^{-1} r is
/// the y-component of one saddle solve with right-hand side (r, 0).
class WGram {
 public:
  explicit WGram(const SeparableProblem& pb, WGramOptions options = {})
      : n_(pb.N()), m_(pb.M()), p_(pb.P()) {
    const SpMat mx = diagonal_sparse(pb.smat.mass_lumped);
    g_direct_ = KronSum({{1.0, pb.tmat.Tt, mx}, {1.0, pb.tmat.Mt, pb.A_ref}});
    lift_tdiag_ = element_widths(pb.grid);
    a_ref_ = pb.A_ref;
    a_ref_llt_ = pb.A_ref_llt;
    b_ = KronSum::single(1.0, pb.tmat.Zt, mx);
    bt_ = b_.transpose();

    BlockSaddleOperator op;
    op.A = g_direct_;
    op.B_time = pb.tmat.Zt;
    op.B_space = mx;
    op.C_tdiag = lift_tdiag_;
    op.C_space = pb.A_ref;
    gram_solver_ = std::make_shared<SaddleSolver>(std::move(op), options.saddle);
  }

  double inner(const Vec& u, const Vec& u_hat, const Vec& v, const Vec& v_hat) const {
    require(u.size() == w_dim() && v.size() == w_dim(), "w_inner: y-vector size");
    require(u_hat.size() == q_dim() && v_hat.size() == q_dim(), "w_inner: lift size");
    return u.dot(g_direct_.apply(v)) + u_hat.dot(apply_g_lift(v_hat));
  }

  double norm(const Vec& u, const Vec& u_hat) const {
    return std::sqrt(std::max(0.0, inner(u, u_hat, u, u_hat)));
  }

  /// G^{-1} r through the mu_bar saddle solve.
  Vec gram_solve(const Vec& r) const {
    return gram_solver_->solve(r, Vec::Zero(q_dim())).y;
  }

  /// sqrt(r^T G^{-1} r), clamped at zero.
  double dual_norm(const Vec& r) const {
    return std::sqrt(std::max(0.0, r.dot(gram_solve(r))));
  }

  Vec lift(const Vec& y) const {
    return kron_block_solve(*a_ref_llt_, lift_tdiag_, b_.apply(y));
  }

  Mat lift(const Mat& y) const {
    Mat out(q_dim(), y.cols());
    for (Index c = 0; c < y.cols(); ++c) out.col(c) = lift(Vec(y.col(c)));
    return out;
  }

  Vec apply_g_direct(const Vec& v) const { return g_direct_.apply(v); }
  Vec apply_g_lift(const Vec& v) const {
    const KronSum c = KronSum::single(1.0, diagonal_sparse(lift_tdiag_), a_ref_);
    return c.apply(v);
  }

  const KronSum& g_direct() const { return g_direct_; }

  Index w_dim() const { return Index(n_) * m_; }
  Index q_dim() const { return Index(n_) * p_; }

 private:
  int n_, m_, p_;
  KronSum g_direct_;
  KronSum b_, bt_;
  Vec lift_tdiag_;
  SpMat a_ref_;
  std::shared_ptr<const Eigen::SimplicialLLT<SpMat>> a_ref_llt_;
  std::shared_ptr<SaddleSolver> gram_solver_;
};

inline double w_inner(const WGram& gram, const Vec& u, const Vec& u_hat, const Vec& v,
                      const Vec& v_hat) {
  return gram.inner(u, u_hat, v, v_hat);
}

/// Residual vector r_i = l_d(mu; w_i) - b_d(mu; y, w_i) over the W_d basis.
/// The lift terms are realized through C-solves at mu: one for the state
/// (B^T C(mu)^{-1} B y) and one for the load (B^T C(mu)^{-1} F_2(mu)).
inline Vec residual_vector(const SeparableProblem& pb, const Vec& mu, const Vec& y) {
  require(y.size() == pb.w_dim(), "residual_vector: y size mismatch");
  const SpMat a_mu = pb.A_x(mu);
  Eigen::SimplicialLLT<SpMat> a_llt(a_mu);
  require(a_llt.info() == Eigen::Success, "A_x(mu) is not SPD");
  const SpMat mx = diagonal_sparse(pb.smat.mass_lumped);
  const Vec k = element_widths(pb.grid);
  const KronSum b = KronSum::single(1.0, pb.tmat.Zt, mx);
  const KronSum bt = b.transpose();

  const KronSum a_blk({{1.0, pb.tmat.Tt, mx}, {1.0, pb.tmat.Mt, a_mu}});
  Vec bd_y = a_blk.apply(y) + bt.apply(kron_block_solve(a_llt, k, b.apply(y)));

  Vec l = pb.F1(mu);
  if (pb.coeffs.Q_y() > 0) l += kron_vector(pb.tmat.R0t, pb.R0x(mu));
  if (pb.coeffs.Q_f() > 0)
    l += bt.apply(kron_block_solve(a_llt, k, pb.F2(mu)));
  return l - bd_y;
}

/// Defect of the discrete Riesz lift definition: solves
/// (M_t^psi (x) A_x(mu)) r = phi and returns the max violation of
/// int (r, q)_{V(mu)} = phi_q over the Q_d basis.
inline double riesz_check(const SeparableProblem& pb, const Vec& mu, const Vec& phi) {
  require(phi.size() == pb.q_dim(), "riesz_check: dual vector size mismatch");
  const SpMat a_mu = pb.A_x(mu);
  Eigen::SimplicialLLT<SpMat> a_llt(a_mu);
  require(a_llt.info() == Eigen::Success, "A_x(mu) is not SPD");
  const Vec k = element_widths(pb.grid);
  const Vec r = kron_block_solve(a_llt, k, phi);
  const KronSum c = KronSum::single(1.0, diagonal_sparse(k), a_mu);
  return (c.apply(r) - phi).cwiseAbs().maxCoeff();
}

/// || r_tilde(mu) ||_{W_d}: the W_d norm of the Riesz representer of the
/// residual of the reconstructed reduced solution.
inline double residual_riesz_norm(const SeparableProblem& pb, const WGram& gram,
                                  const Vec& mu, const Vec& y_rb) {
  return gram.dual_norm(residual_vector(pb, mu, y_rb));
}

}  // namespace strb
