// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "strb/common.hpp"

namespace strb {

/// One term weight * (time_factor (x) space_factor) of a Kronecker sum.
struct KronTerm {
  double weight = 1.0;
  SpMat time_factor;
  SpMat space_factor;
};

/// Sum of Kronecker products acting on space-time vectors with time-major
/// block layout: entry m*N + n (0-based) holds time basis m+1, space basis
/// n+1. Matvecs use the reshape identity (A_t (x) A_x) vec(X) = vec(A_x X
/// A_t^T) with X the N x M matrix of time blocks; the product matrix is never
/// formed unless expand() is called.
struct KronSum {
  std::vector<KronTerm> terms;

  KronSum() = default;
  explicit KronSum(std::vector<KronTerm> t) : terms(std::move(t)) { check_dims(); }

  static KronSum single(double w, SpMat time_factor, SpMat space_factor) {
    KronSum k;
    k.terms.push_back({w, std::move(time_factor), std::move(space_factor)});
    return k;
  }

  Index rows() const {
    return terms.empty() ? 0 : terms[0].time_factor.rows() * terms[0].space_factor.rows();
  }
  Index cols() const {
    return terms.empty() ? 0 : terms[0].time_factor.cols() * terms[0].space_factor.cols();
  }

  void check_dims() const {
    for (const auto& t : terms) {
      require(t.time_factor.rows() * t.space_factor.rows() == rows() &&
                  t.time_factor.cols() * t.space_factor.cols() == cols(),
              "KronSum terms have incompatible dimensions");
    }
  }

  Vec apply(const Vec& v) const {
    require(v.size() == cols(), "KronSum matvec dimension mismatch");
    Vec out = Vec::Zero(rows());
    for (const auto& t : terms) {
      const Index nxc = t.space_factor.cols(), ntc = t.time_factor.cols();
      const Index nxr = t.space_factor.rows(), ntr = t.time_factor.rows();
      Eigen::Map<const Mat> x(v.data(), nxc, ntc);
      Mat ax = t.space_factor * x;                       // nxr x ntc
      Mat yt = t.time_factor * ax.transpose();           // ntr x nxr
      Eigen::Map<Mat> y(out.data(), nxr, ntr);
      y.noalias() += t.weight * yt.transpose();
    }
    return out;
  }

  /// Column-wise apply; the workhorse for projecting onto basis matrices.
  Mat apply_mat(const Mat& v) const {
    require(v.rows() == cols(), "KronSum matvec dimension mismatch");
    Mat out(rows(), v.cols());
    for (Index c = 0; c < v.cols(); ++c) out.col(c) = apply(Vec(v.col(c)));
    return out;
  }

  KronSum transpose() const {
    KronSum k;
    for (const auto& t : terms)
      k.terms.push_back({t.weight, SpMat(t.time_factor.transpose()),
                         SpMat(t.space_factor.transpose())});
    return k;
  }

  /// Explicit sparse assembly; index layout matches apply().
  SpMat expand() const {
    std::vector<Triplet> trips;
    trips.reserve(expanded_nnz());
    for (const auto& t : terms) {
      const Index nxr = t.space_factor.rows(), nxc = t.space_factor.cols();
      for (Index kt = 0; kt < t.time_factor.outerSize(); ++kt)
        for (SpMat::InnerIterator it(t.time_factor, kt); it; ++it)
          for (Index kx = 0; kx < t.space_factor.outerSize(); ++kx)
            for (SpMat::InnerIterator ix(t.space_factor, kx); ix; ++ix)
              trips.emplace_back(it.row() * nxr + ix.row(), it.col() * nxc + ix.col(),
                                 t.weight * it.value() * ix.value());
    }
    SpMat out(rows(), cols());
    out.setFromTriplets(trips.begin(), trips.end());
    out.prune(0.0);
    out.makeCompressed();
    return out;
  }

  Index expanded_nnz() const {
    Index nnz = 0;
    for (const auto& t : terms) nnz += t.time_factor.nonZeros() * t.space_factor.nonZeros();
    return nnz;
  }
};

inline Vec kron_matvec(const KronSum& op, const Vec& v) { return op.apply(v); }

/// (a (x) b) for vectors: entry m*N + n = a_m * b_n.
inline Vec kron_vector(const Vec& time_part, const Vec& space_part) {
  Vec out(time_part.size() * space_part.size());
  for (Index m = 0; m < time_part.size(); ++m)
    out.segment(m * space_part.size(), space_part.size()) = time_part[m] * space_part;
  return out;
}

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;   // relative to the rhs norm
  std::string method;
};

namespace detail {

/// Preconditioned conjugate gradients with negative-curvature detection.
template <class Op, class Prec>
SolveStats pcg(const Op& apply, const Prec& precond, const Vec& b, Vec& x,
               double tol, int max_iter) {
  const double bnorm = b.norm();
  SolveStats stats;
  stats.method = "pcg";
  if (bnorm == 0.0) {
    x.setZero();
    return stats;
  }
  Vec r = b - apply(x);
  Vec z = precond(r);
  Vec p = z;
  double rz = r.dot(z);
  for (int it = 0; it < max_iter; ++it) {
    Vec ap = apply(p);
    const double pap = p.dot(ap);
    if (pap <= 0.0)
      throw SolverError("pcg: negative curvature, operator is not SPD", r.norm() / bnorm);
    const double alpha = rz / pap;
    x += alpha * p;
    r -= alpha * ap;
    stats.iterations = it + 1;
    stats.residual = r.norm() / bnorm;
    if (stats.residual <= tol) return stats;
    z = precond(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return stats;
}

}  // namespace detail

struct SpdOptions {
  double tol = 1e-10;                 // relative residual contract
  Index direct_nnz_budget = 80'000'000;  // expanded-matrix budget for the direct path
  int max_iter = 0;                   // 0: pick from the problem size
  bool allow_iterative = true;
};

/// SPD solver for Kronecker sums: sparse Cholesky of the expanded matrix when
/// it fits the budget, otherwise conjugate gradients with a block-diagonal
/// (time-diagonal (x) space-factor) preconditioner built from the dominant
/// term. Reusable across right-hand sides; solves are const and thread-safe.
class SpdKronSolver {
 public:
  explicit SpdKronSolver(KronSum op, SpdOptions options = {})
      : op_(std::move(op)), options_(options) {
    require(op_.rows() == op_.cols(), "solve_spd needs a square operator");
    if (op_.expanded_nnz() <= options_.direct_nnz_budget) {
      direct_ = std::make_shared<Eigen::SimplicialLDLT<SpMat>>();
      SpMat full = op_.expand();
      direct_->compute(full);
      if (direct_->info() != Eigen::Success) {
        direct_.reset();
        require(options_.allow_iterative, "sparse factorization failed and the "
                                          "iterative fallback is disabled");
      }
    }
    if (!direct_) build_preconditioner();
  }

  Vec solve(const Vec& rhs, SolveStats* stats = nullptr) const {
    Vec x;
    SolveStats st;
    if (direct_) {
      x = refined_direct_solve(rhs, &st.residual);
      st.method = "cholesky";
    } else {
      x = Vec::Zero(op_.cols());
      const int max_iter = options_.max_iter > 0
                               ? options_.max_iter
                               : static_cast<int>(20 * std::sqrt(double(op_.rows())) + 2000);
      st = detail::pcg([&](const Vec& v) { return op_.apply(v); },
                       [&](const Vec& r) { return apply_preconditioner(r); }, rhs, x,
                       options_.tol, max_iter);
    }
    if (st.residual > options_.tol)
      throw SolverError("solve_spd did not reach the residual tolerance", st.residual);
    if (stats) *stats = st;
    return x;
  }

  /// Multi-RHS convenience used for Gram assemblies.
  Mat solve(const Mat& rhs) const {
    if (direct_) {
      Mat x(op_.cols(), rhs.cols());
      for (Index c = 0; c < rhs.cols(); ++c) {
        double res = 0.0;
        x.col(c) = refined_direct_solve(Vec(rhs.col(c)), &res);
        if (res > options_.tol)
          throw SolverError("solve_spd (multi) did not reach tolerance", res);
      }
      return x;
    }
    Mat x(op_.cols(), rhs.cols());
    for (Index c = 0; c < rhs.cols(); ++c) x.col(c) = solve(Vec(rhs.col(c)));
    return x;
  }

  const KronSum& op() const { return op_; }

 private:
  /// Direct solve with a few steps of iterative refinement; the factorization
  /// alone can miss tight tolerances on badly scaled right-hand sides.
  Vec refined_direct_solve(const Vec& rhs, double* residual) const {
    const double bnorm = rhs.norm();
    Vec x = direct_->solve(rhs);
    if (bnorm == 0.0) {
      *residual = 0.0;
      return x;
    }
    Vec r = rhs - op_.apply(x);
    *residual = r.norm() / bnorm;
    for (int step = 0; step < 3 && *residual > options_.tol; ++step) {
      x += direct_->solve(r);
      r = rhs - op_.apply(x);
      *residual = r.norm() / bnorm;
    }
    return x;
  }

  void build_preconditioner() {
    // pick the term with the heaviest time diagonal
    int best = -1;
    double best_score = -1.0;
    for (size_t i = 0; i < op_.terms.size(); ++i) {
      const double score =
          std::abs(op_.terms[i].weight) * Vec(op_.terms[i].time_factor.diagonal()).cwiseAbs().sum();
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(i);
      }
    }
    require(best >= 0, "solve_spd: empty operator");
    const auto& t = op_.terms[best];
    prec_tdiag_ = t.weight * Vec(t.time_factor.diagonal());
    require((prec_tdiag_.array() > 0).all(),
            "solve_spd preconditioner needs a positive time diagonal");
    prec_llt_ = std::make_shared<Eigen::SimplicialLLT<SpMat>>(t.space_factor);
    require(prec_llt_->info() == Eigen::Success,
            "solve_spd preconditioner factorization failed");
  }

  Vec apply_preconditioner(const Vec& r) const {
    const Index nx = prec_llt_->matrixL().rows();
    const Index nt = prec_tdiag_.size();
    Eigen::Map<const Mat> rm(r.data(), nx, nt);
    Mat xm = prec_llt_->solve(rm);
    for (Index m = 0; m < nt; ++m) xm.col(m) /= prec_tdiag_[m];
    return Eigen::Map<Vec>(xm.data(), nx * nt);
  }

  KronSum op_;
  SpdOptions options_;
  std::shared_ptr<Eigen::SimplicialLDLT<SpMat>> direct_;
  std::shared_ptr<Eigen::SimplicialLLT<SpMat>> prec_llt_;
  Vec prec_tdiag_;
};

inline Vec solve_spd(const KronSum& op, const Vec& rhs, SpdOptions options = {},
                     SolveStats* stats = nullptr) {
  return SpdKronSolver(op, options).solve(rhs, stats);
}

/// Symmetric block operator [[A, B^T], [B, -C]] with A a Kronecker sum on the
/// y-space, B = B_time (x) B_space the p-y coupling, and C = diag(c_tdiag)
/// (x) C_space; the diagonal time factor of C is what makes C-solves cheap (P
/// independent space solves).
struct BlockSaddleOperator {
  KronSum A;
  SpMat B_time;    // Z_t, P x M
  SpMat B_space;   // M_x
  Vec C_tdiag;     // M_t^psi diagonal, P
  SpMat C_space;   // A_x(mu), SPD

  Index y_dim() const { return A.cols(); }
  Index p_dim() const { return C_tdiag.size() * C_space.rows(); }

  KronSum B() const { return KronSum::single(1.0, B_time, B_space); }
  KronSum C() const {
    SpMat d(C_tdiag.size(), C_tdiag.size());
    for (Index i = 0; i < C_tdiag.size(); ++i) d.insert(i, i) = C_tdiag[i];
    d.makeCompressed();
    return KronSum::single(1.0, d, C_space);
  }
};

enum class SaddleMethod { SchurCg, Direct };

struct SaddleOptions {
  double tol = 1e-10;        // block-residual contract, relative to the rhs norm
  double cg_target = 1e-13;  // internal CG target; aim well below the contract
  SaddleMethod method = SaddleMethod::SchurCg;
  int max_iter = 0;
  bool allow_fallback = true;  // retry with the direct factorization on CG failure
};

struct SaddleSolution {
  Vec y, p;
  double residual = 0.0;
  SolveStats stats;
};

/// Solver for the saddle system [[A, B^T], [B, -C]] (y, p) = (rhs_y, rhs_p).
/// Default path eliminates p through the C-solve and runs CG on the SPD Schur
/// complement A + B^T C^{-1} B matrix-free; the alternative factorizes the
/// assembled symmetric indefinite matrix. Construct once, solve many; solves
/// are const and thread-safe.
class SaddleSolver {
 public:
  SaddleSolver(BlockSaddleOperator op, SaddleOptions options = {})
      : op_(std::move(op)), options_(options) {
    c_space_llt_ = std::make_shared<Eigen::SimplicialLLT<SpMat>>(op_.C_space);
    require(c_space_llt_->info() == Eigen::Success,
            "saddle solver: C space factor is not SPD");
    require((op_.C_tdiag.array() > 0).all(),
            "saddle solver: C time diagonal must be positive");
    bt_time_ = op_.B_time.transpose();
    bt_space_ = op_.B_space.transpose();
    prec_tdiag_ = Vec::Zero(op_.A.terms.at(0).time_factor.rows());
    for (const auto& t : op_.A.terms) prec_tdiag_ += t.weight * Vec(t.time_factor.diagonal());
    prec_tdiag_ = prec_tdiag_.cwiseMax(1e-300);
    if (options_.method == SaddleMethod::Direct) prepare_direct();
  }

  /// C^{-1} w via one space solve per time block.
  Vec apply_c_inverse(const Vec& w) const {
    const Index nx = op_.C_space.rows();
    const Index nt = op_.C_tdiag.size();
    Eigen::Map<const Mat> wm(w.data(), nx, nt);
    Mat xm = c_space_llt_->solve(wm);
    for (Index p = 0; p < nt; ++p) xm.col(p) /= op_.C_tdiag[p];
    return Eigen::Map<Vec>(xm.data(), nx * nt);
  }

  Vec apply_b(const Vec& y) const {
    return KronSum::single(1.0, op_.B_time, op_.B_space).apply(y);
  }
  Vec apply_bt(const Vec& p) const {
    return KronSum::single(1.0, bt_time_, bt_space_).apply(p);
  }

  Vec apply_schur(const Vec& y) const {
    return op_.A.apply(y) + apply_bt(apply_c_inverse(apply_b(y)));
  }

  SaddleSolution solve(const Vec& rhs_y, const Vec& rhs_p) const {
    require(rhs_y.size() == op_.y_dim() && rhs_p.size() == op_.p_dim(),
            "saddle solve dimension mismatch");
    SaddleSolution sol;
    if (options_.method == SaddleMethod::Direct) {
      sol = solve_direct(rhs_y, rhs_p);
    } else {
      sol = solve_schur(rhs_y, rhs_p);
      if (sol.residual > options_.tol && options_.allow_fallback) {
        {
          std::lock_guard<std::mutex> lock(fallback_mutex_);
          prepare_direct();
        }
        sol = solve_direct(rhs_y, rhs_p);
        sol.stats.method += "+fallback";
      }
    }
    if (sol.residual > options_.tol)
      throw SolverError("saddle solve did not reach the residual tolerance", sol.residual);
    return sol;
  }

 private:
  SaddleSolution solve_schur(const Vec& rhs_y, const Vec& rhs_p) const {
    SaddleSolution sol;
    const Vec rhs_schur = rhs_y + apply_bt(apply_c_inverse(rhs_p));
    sol.y = Vec::Zero(op_.y_dim());
    const int max_iter = options_.max_iter > 0
                             ? options_.max_iter
                             : static_cast<int>(40 * std::sqrt(double(op_.y_dim())) + 5000);
    sol.stats = detail::pcg([&](const Vec& v) { return apply_schur(v); },
                            [&](const Vec& r) { return apply_schur_preconditioner(r); },
                            rhs_schur, sol.y, options_.cg_target, max_iter);
    sol.stats.method = "schur_cg";
    sol.p = apply_c_inverse(apply_b(sol.y) - rhs_p);
    sol.residual = block_residual(sol.y, sol.p, rhs_y, rhs_p);
    return sol;
  }

  SaddleSolution solve_direct(const Vec& rhs_y, const Vec& rhs_p) const {
    require(direct_ != nullptr, "direct factorization unavailable");
    SaddleSolution sol;
    Vec rhs(rhs_y.size() + rhs_p.size());
    rhs << rhs_y, rhs_p;
    Vec x = direct_->solve(rhs);
    sol.y = x.head(rhs_y.size());
    sol.p = x.tail(rhs_p.size());
    sol.stats.method = "sparse_lu";
    sol.residual = block_residual(sol.y, sol.p, rhs_y, rhs_p);
    return sol;
  }

  /// Block-diagonal preconditioner for the Schur complement: the sum of A's
  /// time diagonals tensored with C's space factor, whose factorization is
  /// already available.
  Vec apply_schur_preconditioner(const Vec& r) const {
    const Index nx = op_.C_space.rows();
    const Index nt = prec_tdiag_.size();
    Eigen::Map<const Mat> rm(r.data(), nx, nt);
    Mat xm = c_space_llt_->solve(rm);
    for (Index m = 0; m < nt; ++m) xm.col(m) /= prec_tdiag_[m];
    return Eigen::Map<Vec>(xm.data(), nx * nt);
  }

  double block_residual(const Vec& y, const Vec& p, const Vec& rhs_y,
                        const Vec& rhs_p) const {
    const Vec r1 = op_.A.apply(y) + apply_bt(p) - rhs_y;
    const Vec r2 = apply_b(y) - c_apply(p) - rhs_p;
    const double scale = std::sqrt(rhs_y.squaredNorm() + rhs_p.squaredNorm());
    const double res = std::sqrt(r1.squaredNorm() + r2.squaredNorm());
    return scale > 0 ? res / scale : res;
  }

  Vec c_apply(const Vec& p) const {
    const Index nx = op_.C_space.rows();
    const Index nt = op_.C_tdiag.size();
    Eigen::Map<const Mat> pm(p.data(), nx, nt);
    Mat out = op_.C_space * pm;
    for (Index b = 0; b < nt; ++b) out.col(b) *= op_.C_tdiag[b];
    return Eigen::Map<Vec>(out.data(), nx * nt);
  }

  void prepare_direct() const {
    if (direct_) return;
    const Index ny = op_.y_dim(), np = op_.p_dim();
    SpMat a = op_.A.expand();
    SpMat b = KronSum::single(1.0, op_.B_time, op_.B_space).expand();
    SpMat c = op_.C().expand();
    std::vector<Triplet> trips;
    trips.reserve(a.nonZeros() + 2 * b.nonZeros() + c.nonZeros());
    for (Index k = 0; k < a.outerSize(); ++k)
      for (SpMat::InnerIterator it(a, k); it; ++it)
        trips.emplace_back(it.row(), it.col(), it.value());
    for (Index k = 0; k < b.outerSize(); ++k)
      for (SpMat::InnerIterator it(b, k); it; ++it) {
        trips.emplace_back(ny + it.row(), it.col(), it.value());
        trips.emplace_back(it.col(), ny + it.row(), it.value());
      }
    for (Index k = 0; k < c.outerSize(); ++k)
      for (SpMat::InnerIterator it(c, k); it; ++it)
        trips.emplace_back(ny + it.row(), ny + it.col(), -it.value());
    SpMat s(ny + np, ny + np);
    s.setFromTriplets(trips.begin(), trips.end());
    s.makeCompressed();
    auto lu = std::make_shared<Eigen::SparseLU<SpMat>>();
    lu->compute(s);
    require(lu->info() == Eigen::Success, "saddle matrix factorization failed");
    direct_ = std::move(lu);
  }

  BlockSaddleOperator op_;
  SaddleOptions options_;
  std::shared_ptr<Eigen::SimplicialLLT<SpMat>> c_space_llt_;
  mutable std::shared_ptr<Eigen::SparseLU<SpMat>> direct_;
  mutable std::mutex fallback_mutex_;
  SpMat bt_time_, bt_space_;
  Vec prec_tdiag_;
};

inline SaddleSolution solve_saddle(const BlockSaddleOperator& op, const Vec& rhs_y,
                                   const Vec& rhs_p, SaddleOptions options = {}) {
  return SaddleSolver(op, options).solve(rhs_y, rhs_p);
}

}  // namespace strb
