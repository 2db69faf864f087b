// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "strb/common.hpp"
#include "strb/kron.hpp"
#include "strb/mesh.hpp"
#include "strb/space_fem.hpp"
#include "strb/time_grid.hpp"

namespace strb {

/// Admissible parameter box P.
struct ParameterBox {
  Vec lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }

  bool contains(const Vec& mu, double slack = 0.0) const {
    if (mu.size() != lo.size()) return false;
    for (Index i = 0; i < mu.size(); ++i)
      if (mu[i] < lo[i] - slack || mu[i] > hi[i] + slack) return false;
    return true;
  }
};

using ThetaFn = std::function<double(const Vec&)>;

/// The scalar coefficient functions of the affine decomposition. Cheap to
/// build and evaluate; carries everything the online phase needs about the
/// parameter dependence.
struct AffineCoefficients {
  std::vector<ThetaFn> A;    // theta_A^q, required > 0 on the box
  std::vector<ThetaFn> f;    // theta_f^q
  std::vector<ThetaFn> y0;   // theta_y0^q
  ParameterBox box;
  Vec mu_bar;

  int Q_A() const { return static_cast<int>(A.size()); }
  int Q_f() const { return static_cast<int>(f.size()); }
  int Q_y() const { return static_cast<int>(y0.size()); }
};

/// min-theta coercivity/continuity bounds relative to the reference norm.
struct MinTheta {
  double c_c_lb = 0.0;  // lower bound for the discrete coercivity constant
  double c_s_ub = 0.0;  // upper bound for the discrete continuity constant
  double alpha_lb = 0.0;  // min(c_c_lb, 1 / c_s_ub)
};

inline MinTheta min_theta_bounds(const AffineCoefficients& coeffs, const Vec& mu) {
  require(coeffs.box.contains(mu, 1e-12), "parameter outside the admissible box");
  MinTheta mt;
  mt.c_c_lb = std::numeric_limits<double>::infinity();
  mt.c_s_ub = 0.0;
  for (const auto& theta : coeffs.A) {
    const double num = theta(mu);
    const double den = theta(coeffs.mu_bar);
    require(num > 0.0 && den > 0.0, "min-theta requires theta_A > 0");
    const double ratio = num / den;
    mt.c_c_lb = std::min(mt.c_c_lb, ratio);
    mt.c_s_ub = std::max(mt.c_s_ub, ratio);
  }
  mt.alpha_lb = std::min(mt.c_c_lb, 1.0 / mt.c_s_ub);
  return mt;
}

/// Per-q min/max of theta_A^q(mu)/theta_A^q(mu_bar) over the box, estimated
/// by deterministic sampling (exact for component-wise monotone thetas
/// sampled at the box corners; the thermal block is of this kind).
struct ThetaBounds {
  Vec ratio_min, ratio_max;
};

/// Parameter-separable parabolic problem: affine parts of A(mu), f(mu),
/// y_0(mu) together with the assembled temporal and spatial operators. The
/// reference stiffness A_x(mu_bar) and its factorization are cached for all
/// lift and norm machinery. Immutable after finalize().
struct SeparableProblem {
  TimeGrid grid;
  TimeMatrices tmat;
  SpaceMesh mesh;
  SpaceMatrices smat;

  std::vector<SpMat> A_parts;   // free x free, SPSD
  std::vector<Vec> F1_parts;    // N*M per f-term
  std::vector<Vec> F2_parts;    // N*P per f-term
  std::vector<Vec> R0x_parts;   // N per y0-term
  AffineCoefficients coeffs;

  SpMat A_ref;  // A_x(mu_bar)
  std::shared_ptr<const Eigen::SimplicialLLT<SpMat>> A_ref_llt;

  int N() const { return smat.num_free; }
  int M() const { return grid.num_nodes(); }
  int P() const { return grid.num_elements(); }
  Index w_dim() const { return Index(N()) * M(); }
  Index q_dim() const { return Index(N()) * P(); }

  Vec theta_A_values(const Vec& mu) const {
    Vec v(coeffs.Q_A());
    for (int q = 0; q < coeffs.Q_A(); ++q) v[q] = coeffs.A[q](mu);
    return v;
  }

  SpMat A_x(const Vec& mu) const {
    require(coeffs.box.contains(mu, 1e-12), "parameter outside the admissible box");
    SpMat a = coeffs.A[0](mu) * A_parts[0];
    for (size_t q = 1; q < A_parts.size(); ++q) a += coeffs.A[q](mu) * A_parts[q];
    return a;
  }

  Vec F1(const Vec& mu) const { return combine(F1_parts, coeffs.f, mu, w_dim()); }
  Vec F2(const Vec& mu) const { return combine(F2_parts, coeffs.f, mu, q_dim()); }
  Vec R0x(const Vec& mu) const { return combine(R0x_parts, coeffs.y0, mu, N()); }

  void finalize() {
    require(static_cast<int>(A_parts.size()) == coeffs.Q_A() && coeffs.Q_A() >= 1,
            "affine stiffness parts and coefficients disagree");
    require(static_cast<int>(F1_parts.size()) == coeffs.Q_f() &&
                static_cast<int>(F2_parts.size()) == coeffs.Q_f(),
            "affine load parts and coefficients disagree");
    require(static_cast<int>(R0x_parts.size()) == coeffs.Q_y(),
            "affine initial parts and coefficients disagree");
    for (int q = 0; q < coeffs.Q_A(); ++q)
      require(coeffs.A[q](coeffs.mu_bar) > 0.0, "theta_A must be positive at mu_bar");
    A_ref = A_x(coeffs.mu_bar);
    auto llt = std::make_shared<Eigen::SimplicialLLT<SpMat>>(A_ref);
    require(llt->info() == Eigen::Success, "A_x(mu_bar) is not SPD; check the "
                                           "Dirichlet boundary");
    A_ref_llt = std::move(llt);
  }

 private:
  Vec combine(const std::vector<Vec>& parts, const std::vector<ThetaFn>& thetas,
              const Vec& mu, Index dim) const {
    require(coeffs.box.contains(mu, 1e-12), "parameter outside the admissible box");
    Vec out = Vec::Zero(dim);
    for (size_t q = 0; q < parts.size(); ++q) out += thetas[q](mu) * parts[q];
    return out;
  }
};

inline MinTheta min_theta_bounds(const SeparableProblem& problem, const Vec& mu) {
  return min_theta_bounds(problem.coeffs, mu);
}

inline ThetaBounds theta_bounds(const AffineCoefficients& coeffs, int samples_per_axis = 2) {
  const int dim = coeffs.box.dim();
  ThetaBounds tb;
  tb.ratio_min = Vec::Constant(coeffs.Q_A(), std::numeric_limits<double>::infinity());
  tb.ratio_max = Vec::Zero(coeffs.Q_A());
  // corner/grid enumeration; dim is small for the problems handled here
  std::vector<int> idx(dim, 0);
  while (true) {
    Vec mu(dim);
    for (int i = 0; i < dim; ++i) {
      const double t = samples_per_axis == 1 ? 0.0
                                             : double(idx[i]) / (samples_per_axis - 1);
      mu[i] = coeffs.box.lo[i] + t * (coeffs.box.hi[i] - coeffs.box.lo[i]);
    }
    for (int q = 0; q < coeffs.Q_A(); ++q) {
      const double r = coeffs.A[q](mu) / coeffs.A[q](coeffs.mu_bar);
      tb.ratio_min[q] = std::min(tb.ratio_min[q], r);
      tb.ratio_max[q] = std::max(tb.ratio_max[q], r);
    }
    int i = 0;
    for (; i < dim; ++i) {
      if (++idx[i] < samples_per_axis) break;
      idx[i] = 0;
    }
    if (i == dim) break;
  }
  require((tb.ratio_min.array() > 0).all(), "theta ratios must stay positive on the box");
  return tb;
}

/// Everything needed to rebuild a problem (or just its affine coefficients)
/// from persisted metadata.
struct ProblemSpec {
  std::string kind = "thermal_block";
  int vertices_per_side = 13;
  int time_elements = 30;
  double final_time = 3.0;
  double diffusivity_min = 0.1, diffusivity_max = 10.0;
  double load_min = -1.0, load_max = 1.0;
};

inline AffineCoefficients make_thermal_block_coefficients(const ProblemSpec& spec) {
  AffineCoefficients coeffs;
  coeffs.box.lo = Vec(9);
  coeffs.box.hi = Vec(9);
  for (int q = 0; q < 8; ++q) {
    coeffs.box.lo[q] = spec.diffusivity_min;
    coeffs.box.hi[q] = spec.diffusivity_max;
  }
  coeffs.box.lo[8] = spec.load_min;
  coeffs.box.hi[8] = spec.load_max;
  coeffs.mu_bar = Vec::Ones(9);
  for (int q = 0; q < 8; ++q)
    coeffs.A.push_back([q](const Vec& mu) { return mu[q]; });
  coeffs.A.push_back([](const Vec&) { return 1.0; });  // fixed block Omega_9
  coeffs.f.push_back([](const Vec& mu) { return mu[8]; });
  return coeffs;
}

inline AffineCoefficients make_affine_coefficients(const ProblemSpec& spec) {
  require(spec.kind == "thermal_block", "unknown problem kind '" + spec.kind + "'");
  return make_thermal_block_coefficients(spec);
}

/// Assembles a problem from a mesh, a time grid and the spatial affine data.
/// The temporal load profile is constant one (f = f^x * 1(t)), which covers
/// the benchmark; general profiles enter through explicit F1/F2 parts.
inline SeparableProblem assemble_problem(SpaceMesh mesh, SpaceMatrices smat,
                                         TimeGrid grid, AffineCoefficients coeffs,
                                         std::vector<SpMat> A_parts,
                                         std::vector<Vec> fx_parts,
                                         std::vector<Vec> R0x_parts) {
  SeparableProblem pb;
  pb.grid = std::move(grid);
  pb.tmat = assemble_time_matrices(pb.grid);
  pb.mesh = std::move(mesh);
  pb.smat = std::move(smat);
  pb.A_parts = std::move(A_parts);
  pb.coeffs = std::move(coeffs);
  const Vec chi = hat_integrals(pb.grid);
  Vec psi(pb.grid.num_elements());
  for (int p = 0; p < pb.grid.num_elements(); ++p) psi[p] = pb.grid.width(p);
  for (auto& fx : fx_parts) {
    pb.F1_parts.push_back(kron_vector(chi, fx));
    pb.F2_parts.push_back(kron_vector(psi, fx));
  }
  pb.R0x_parts = std::move(R0x_parts);
  pb.finalize();
  return pb;
}

/// The 2D thermal block of the benchmark: nine subdomains with theta_A^q =
/// mu_q (q = 1..8) and theta_A^9 = 1, Neumann load mu_9 on the bottom edge,
/// homogeneous Dirichlet data on the top edge, y_0 = 0.
inline SeparableProblem make_thermal_block(const ProblemSpec& spec) {
  require(spec.kind == "thermal_block", "unknown problem kind '" + spec.kind + "'");
  SpaceMesh mesh = build_thermal_block_mesh(spec.vertices_per_side);
  TimeGrid grid = build_time_grid(spec.final_time, spec.time_elements);
  AffineCoefficients coeffs = make_thermal_block_coefficients(spec);
  SpaceMatrices sm = assemble_space_matrices(mesh);
  require(sm.labels.size() == 9, "thermal block mesh must carry 9 subdomains");
  std::vector<Vec> fx = {sm.boundary_loads.at(BoundaryTag::Bottom)};
  std::vector<SpMat> a_parts = sm.stiffness;
  return assemble_problem(std::move(mesh), std::move(sm), std::move(grid),
                          std::move(coeffs), std::move(a_parts), std::move(fx), {});
}

inline SeparableProblem make_thermal_block(int vertices_per_side, int time_elements,
                                           double final_time) {
  ProblemSpec spec;
  spec.vertices_per_side = vertices_per_side;
  spec.time_elements = time_elements;
  spec.final_time = final_time;
  return make_thermal_block(spec);
}

inline SeparableProblem make_problem(const ProblemSpec& spec) {
  return make_thermal_block(spec);
}

/// Assembled operator and data vectors at one parameter.
struct OperatorEvaluation {
  SpMat A_x;
  Vec F1, F2, R0x;
};

inline OperatorEvaluation evaluate_operator(const SeparableProblem& problem, const Vec& mu) {
  OperatorEvaluation ev;
  ev.A_x = problem.A_x(mu);
  ev.F1 = problem.F1(mu);
  ev.F2 = problem.F2(mu);
  ev.R0x = problem.coeffs.Q_y() > 0 ? problem.R0x(mu) : Vec::Zero(problem.N());
  return ev;
}

}  // namespace strb
