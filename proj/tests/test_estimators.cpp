// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch.hpp>

#include "oracles.hpp"
#include "strb/estimators.hpp"

using namespace strb;

namespace {

struct Trained {
  SeparableProblem pb;
  WGram gram;
  HifiSolver hifi;
  ReducedBasis basis;
  ReducedModel model;
  EstimatorOffline est;

  explicit Trained(int snapshots = 3, int L = 2)
      : pb(testing::make_toy_problem(4, 4, 5)), gram(pb), hifi(pb) {
    Rng rng(97);
    std::vector<Snapshot> snaps;
    for (int i = 0; i < snapshots; ++i) {
      Vec mu = testing::random_parameter(pb.coeffs.box, rng);
      mu[mu.size() - 1] = rng.uniform(0.5, 1.0);
      snaps.push_back(hifi.solve(mu));
    }
    basis = basis_from_pod(pod(snaps, L, gram));
    model = build_reduced_model(pb, basis);
    est = build_estimator_offline(pb, basis);
  }

  /// The estimator kernel K, assembled independently of the library path.
  Mat dense_kernel() const {
    const Vec minv = pb.smat.mass_lumped.cwiseInverse();
    const Mat a_ref = Mat(pb.A_ref);
    const Mat am = a_ref * minv.asDiagonal();
    const Mat zmz = Mat(pb.tmat.Zt).transpose() *
                    Vec(element_widths(pb.grid)).cwiseInverse().asDiagonal() *
                    Mat(pb.tmat.Zt);
    return testing::dense_kron(zmz, a_ref) +
           testing::dense_kron(Mat(pb.tmat.Mt), am * am * a_ref) +
           testing::dense_kron(Mat(pb.tmat.Tt), am * a_ref);
  }

  /// frak{S}(mu) and frak{s}(mu) assembled densely from their definitions.
  Mat dense_frak_S(const Vec& mu) const {
    const Vec minv = pb.smat.mass_lumped.cwiseInverse();
    const Mat a_mu = Mat(pb.A_x(mu));
    const Mat mx = Vec(pb.smat.mass_lumped).asDiagonal();
    const Mat zmz = Mat(pb.tmat.Zt).transpose() *
                    Vec(element_widths(pb.grid)).cwiseInverse().asDiagonal() *
                    Mat(pb.tmat.Zt);
    return testing::dense_kron(zmz, mx) +
           testing::dense_kron(Mat(pb.tmat.Mt), a_mu * minv.asDiagonal() * a_mu) +
           testing::dense_kron(Mat(pb.tmat.Tt), a_mu);
  }

  Vec dense_frak_s(const Vec& mu) const {
    const Vec minv = pb.smat.mass_lumped.cwiseInverse();
    const Mat a_mu = Mat(pb.A_x(mu));
    Vec s = Vec::Zero(pb.w_dim());
    // (I_M (x) A_mu M^-1) F1
    const Vec f1 = pb.F1(mu);
    for (int m = 0; m < pb.M(); ++m)
      s.segment(m * pb.N(), pb.N()) +=
          a_mu * (minv.asDiagonal() * f1.segment(m * pb.N(), pb.N()));
    // (Z_t^T (M_psi)^-1 (x) I_N) F2
    const Vec f2 = pb.F2(mu);
    const Mat zt = Mat(pb.tmat.Zt);
    for (int m = 0; m < pb.M(); ++m)
      for (int p = 0; p < pb.P(); ++p)
        s.segment(m * pb.N(), pb.N()) +=
            zt(p, m) / pb.grid.width(p) * f2.segment(p * pb.N(), pb.N());
    // R0 term absent: Q_y = 0 in the toy problem
    return s;
  }
};

}  // namespace

TEST_CASE("estimator offline structure") {
  const Trained t;
  const int qa = t.pb.coeffs.Q_A();

  SECTION("family counts") {
    REQUIRE(t.est.Q_frak_S == 1 + qa * qa + qa);
    REQUIRE(t.est.Q_frak_s == qa * t.pb.coeffs.Q_f() + t.pb.coeffs.Q_f());
    REQUIRE(t.est.dim() == t.est.Q_frak_s + Index(t.est.Q_frak_S) * t.basis.L());
  }
  SECTION("thermal block counts: 91 and 10") {
    // formula evaluation with Q_A = 9, Q_y = 0, Q_f = 1
    const SeparableProblem tb = make_thermal_block(4, 2, 1.0);
    ReducedBasis single;
    Rng rng(101);
    Snapshot s = HifiSolver(tb).solve((Vec(9) << 1, 1, 1, 1, 1, 1, 1, 1, 0.5).finished());
    WGram gram(tb);
    const double norm = gram.norm(s.y, s.p_hat);
    single.B_W = s.y / norm;
    single.B_Q = s.p_hat / norm;
    const EstimatorOffline est = build_estimator_offline(tb, single);
    REQUIRE(est.Q_frak_S == 91);
    REQUIRE(est.Q_frak_s == 10);
    REQUIRE(est.G.rows() == 10 + 91);
  }
  SECTION("L = 0 basis leaves only the load columns (10x10 for the thermal block)") {
    const SeparableProblem tb = make_thermal_block(4, 2, 1.0);
    ReducedBasis empty;
    empty.B_W = Mat(tb.w_dim(), 0);
    empty.B_Q = Mat(tb.q_dim(), 0);
    const EstimatorOffline est = build_estimator_offline(tb, empty);
    REQUIRE(est.G.rows() == 10);
    REQUIRE(est.G.cols() == 10);
  }
  SECTION("Gram is symmetric PSD") {
    REQUIRE((t.est.G - t.est.G.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(t.est.G);
    REQUIRE(es.eigenvalues().minCoeff() >=
            -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff()));
  }
  SECTION("memory budget rejection names the required size") {
    EstimatorOfflineOptions opts;
    opts.max_columns = 2;
    REQUIRE_THROWS_WITH(build_estimator_offline(t.pb, t.basis, opts),
                        Catch::Contains("columns"));
  }
}

TEST_CASE("frak identities") {
  const Trained t;
  Rng rng(103);

  SECTION("affine assembly of frak S and frak s matches the dense definitions") {
    for (int trial = 0; trial < 3; ++trial) {
      const Vec mu = testing::random_parameter(t.pb.coeffs.box, rng);
      const Mat direct = t.dense_frak_S(mu);
      // affine route through the theta tables and the stored maps
      Mat affine = Mat::Zero(t.pb.w_dim(), t.pb.w_dim());
      {
        const Vec minv = t.pb.smat.mass_lumped.cwiseInverse();
        const Mat zmz = Mat(t.pb.tmat.Zt).transpose() *
                        Vec(element_widths(t.pb.grid)).cwiseInverse().asDiagonal() *
                        Mat(t.pb.tmat.Zt);
        const Mat mx = Vec(t.pb.smat.mass_lumped).asDiagonal();
        for (int q = 0; q < t.est.Q_frak_S; ++q) {
          const auto& ix = t.est.S_map[q];
          Mat part;
          if (ix.family == 0) {
            part = testing::dense_kron(zmz, mx);
          } else if (ix.family == 1) {
            part = testing::dense_kron(
                Mat(t.pb.tmat.Mt), Mat(t.pb.A_parts[ix.i]) * minv.asDiagonal() *
                                       Mat(t.pb.A_parts[ix.j]));
          } else {
            part = testing::dense_kron(Mat(t.pb.tmat.Tt), Mat(t.pb.A_parts[ix.i]));
          }
          affine += t.est.theta_S(q, t.pb.coeffs, mu) * part;
        }
      }
      REQUIRE((affine - direct).cwiseAbs().maxCoeff() <=
              1e-12 * direct.cwiseAbs().maxCoeff());
    }
  }

  SECTION("frak S(mu) y = frak s(mu) for the hifi solution") {
    SaddleOptions opts;
    for (int trial = 0; trial < 5; ++trial) {
      Vec mu = testing::random_parameter(t.pb.coeffs.box, rng);
      mu[mu.size() - 1] = rng.uniform(0.5, 1.0);
      const Snapshot snap = t.hifi.solve(mu);
      const Vec lhs = t.dense_frak_S(mu) * snap.y;
      const Vec rhs = t.dense_frak_s(mu);
      REQUIRE((lhs - rhs).norm() <= 10.0 * opts.tol * rhs.norm());
    }
  }
}

TEST_CASE("eta_c") {
  const Trained t;
  Rng rng(107);

  SECTION("zero data gives a zero estimate") {
    Vec mu = t.pb.coeffs.mu_bar;
    mu[mu.size() - 1] = 0.0;
    const OnlineSolution sol = solve_online(t.model, mu);
    const EtaResult r = eta_c(t.model, t.est, mu, sol.u_y, sol.y_rb_norm);
    REQUIRE(r.abs <= 1e-12);
  }
  SECTION("decomposition fidelity: Gram path equals the direct kernel solve") {
    const Mat kernel = t.dense_kernel();
    const Eigen::LDLT<Mat> kernel_ldlt(kernel);
    for (int trial = 0; trial < 10; ++trial) {
      const Vec mu = testing::random_parameter(t.pb.coeffs.box, rng);
      const OnlineSolution sol = solve_online(t.model, mu);
      const EtaResult r = eta_c(t.model, t.est, mu, sol.u_y, sol.y_rb_norm);

      const Vec r_hat = t.dense_frak_s(mu) - t.dense_frak_S(mu) * (t.basis.B_W * sol.u_y);
      const double quad = r_hat.dot(kernel_ldlt.solve(r_hat));
      const MinTheta mt = min_theta_bounds(t.pb, mu);
      const double direct = std::sqrt(std::max(0.0, quad)) / (mt.c_c_lb * mt.alpha_lb);
      REQUIRE(r.abs == Approx(direct).epsilon(1e-8).margin(1e-12));
    }
  }
  SECTION("certified flag follows the relative threshold") {
    Vec mu = t.pb.coeffs.mu_bar;
    mu[mu.size() - 1] = 0.9;
    const OnlineSolution sol = solve_online(t.model, mu);
    const EtaResult r = eta_c(t.model, t.est, mu, sol.u_y, sol.y_rb_norm);
    REQUIRE(r.certified == (r.rel <= 1.0));
  }
  SECTION("zero norm with nonzero residual reports uncertified infinity") {
    Vec mu = t.pb.coeffs.mu_bar;
    mu[mu.size() - 1] = 0.9;
    const OnlineSolution sol = solve_online(t.model, mu);
    const EtaResult r = eta_c(t.model, t.est, mu, Vec::Zero(t.model.L), 0.0);
    REQUIRE(std::isinf(r.rel));
    REQUIRE_FALSE(r.certified);
  }
}

TEST_CASE("guarantee chain and effectivity ordering on a validation set") {
  const Trained t(4, 3);
  Rng rng(109);
  for (int trial = 0; trial < 8; ++trial) {
    Vec mu = testing::random_parameter(t.pb.coeffs.box, rng);
    const Snapshot snap = t.hifi.solve(mu);
    const OnlineSolution sol = solve_online(t.model, mu);
    const Reconstruction recon = reconstruct(t.basis, sol.u_y, sol.u_p);
    const TrueError err = true_error(t.gram, snap, recon);
    const EtaResult es = eta_star(t.pb, t.gram, mu, recon.y, sol.y_rb_norm);
    const EtaResult ec = eta_c(t.model, t.est, mu, sol.u_y, sol.y_rb_norm);

    const double slack1 = 1e-8 * std::max(err.abs, es.abs);
    REQUIRE(err.abs <= es.abs + slack1);
    const double slack2 = 1e-8 * std::max(es.abs, ec.abs);
    REQUIRE(es.abs <= ec.abs + slack2);
    if (ec.certified) REQUIRE(err.rel <= ec.rel + 1e-8 * std::max(err.rel, ec.rel));
    if (es.certified) REQUIRE(err.rel <= es.rel + 1e-8 * std::max(err.rel, es.rel));
  }
}

TEST_CASE("eta_star") {
  const Trained t;
  Rng rng(113);

  SECTION("hifi solution yields a vanishing estimate") {
    Vec mu = testing::random_parameter(t.pb.coeffs.box, rng);
    mu[mu.size() - 1] = 0.8;
    const Snapshot snap = t.hifi.solve(mu);
    const double norm = t.gram.norm(snap.y, snap.p_hat);
    const Vec rhs_y = t.pb.F1(mu);
    const Vec rhs_p = t.pb.F2(mu);
    const double rhs_norm = std::sqrt(rhs_y.squaredNorm() + rhs_p.squaredNorm());
    const MinTheta mt = min_theta_bounds(t.pb, mu);
    const EtaResult r = eta_star(t.pb, t.gram, mu, snap.y, norm);
    REQUIRE(r.abs <= 10.0 * 1e-10 * rhs_norm / mt.alpha_lb);
  }
  SECTION("zero state yields a positive estimate for nonzero data") {
    Vec mu = t.pb.coeffs.mu_bar;
    mu[mu.size() - 1] = 1.0;
    const EtaResult r = eta_star(t.pb, t.gram, mu, Vec::Zero(t.pb.w_dim()), 0.0);
    REQUIRE(r.abs > 0.0);
    REQUIRE(std::isinf(r.rel));
  }
}

TEST_CASE("true_error") {
  const Trained t;
  Rng rng(127);
  Vec mu = testing::random_parameter(t.pb.coeffs.box, rng);
  mu[mu.size() - 1] = 0.7;
  const Snapshot snap = t.hifi.solve(mu);

  SECTION("exact reproduction gives zero") {
    Reconstruction recon;
    recon.y = snap.y;
    recon.p = snap.p;
    recon.y_lift = snap.p_hat;
    const TrueError err = true_error(t.gram, snap, recon);
    REQUIRE(err.abs == 0.0);
    REQUIRE(err.rel == 0.0);
  }
  SECTION("zero reconstruction gives relative error one") {
    Reconstruction recon;
    recon.y = Vec::Zero(t.pb.w_dim());
    recon.p = Vec::Zero(t.pb.q_dim());
    recon.y_lift = Vec::Zero(t.pb.q_dim());
    const TrueError err = true_error(t.gram, snap, recon);
    REQUIRE(err.rel == Approx(1.0).epsilon(1e-12));
  }
  SECTION("triangle inequality across random reconstructions") {
    for (int trial = 0; trial < 5; ++trial) {
      Vec u1(t.basis.L()), u2(t.basis.L());
      for (int j = 0; j < t.basis.L(); ++j) {
        u1[j] = rng.normal();
        u2[j] = rng.normal();
      }
      const Reconstruction r1 = reconstruct(t.basis, u1, u1);
      const Reconstruction r2 = reconstruct(t.basis, u2, u2);
      const double e1 = true_error(t.gram, snap, r1).abs;
      const double e2 = true_error(t.gram, snap, r2).abs;
      const double d12 = t.gram.norm(r2.y - r1.y, r2.y_lift - r1.y_lift);
      REQUIRE(e1 <= e2 + d12 + 1e-12);
    }
  }
}
