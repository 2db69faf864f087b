// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <utility>

#include "strb/common.hpp"

namespace strb {

/// Temporal grid on I = (0, T]. Nodes t_0 = 0 < t_1 < ... < t_{M-1} = T carry
/// the CG1 hat functions chi_1..chi_M (chi_m peaks at node t_{m-1}); the P =
/// M - 1 elements (t_{p-1}, t_p] carry the DG0 indicators psi_1..psi_P.
struct TimeGrid {
  double final_time = 0.0;
  Vec nodes;

  int num_nodes() const { return static_cast<int>(nodes.size()); }      // M
  int num_elements() const { return num_nodes() - 1; }                  // P

  /// Width k_p of element p (0-based: element p spans nodes[p]..nodes[p+1]).
  double width(int p) const { return nodes[p + 1] - nodes[p]; }
};

/// Validates node monotonicity and endpoint consistency.
inline TimeGrid make_time_grid(Vec nodes) {
  require(nodes.size() >= 2, "time grid needs at least 2 nodes");
  require(nodes[0] == 0.0, "time grid must start at t = 0");
  for (Index i = 0; i + 1 < nodes.size(); ++i)
    require(nodes[i] < nodes[i + 1], "time grid nodes must be strictly increasing");
  TimeGrid grid;
  grid.final_time = nodes[nodes.size() - 1];
  grid.nodes = std::move(nodes);
  double sum = 0.0;
  for (int p = 0; p < grid.num_elements(); ++p) sum += grid.width(p);
  require(std::abs(sum - grid.final_time) <= 1e-12 * grid.final_time,
          "element widths do not sum to the final time");
  return grid;
}

/// Uniform grid with num_elements steps of size T / num_elements.
inline TimeGrid build_time_grid(double final_time, int num_elements) {
  require(final_time > 0.0, "final time must be positive");
  require(num_elements >= 1, "need at least one time element");
  Vec nodes(num_elements + 1);
  for (int i = 0; i <= num_elements; ++i)
    nodes[i] = final_time * static_cast<double>(i) / num_elements;
  nodes[num_elements] = final_time;
  return make_time_grid(std::move(nodes));
}

/// Temporal matrices: T_t (rank-1 end-point matrix), M_t (CG1 mass), M_t^psi
/// (DG0 mass), Z_t (coupling int (chi_j)_t psi_i) and R_0^t (chi_m(0)).
/// All entries are exact integrals of the piecewise polynomials.
struct TimeMatrices {
  SpMat Tt;        // M x M, single entry 1 at (M-1, M-1)
  SpMat Mt;        // M x M tridiagonal
  SpMat Mt_psi;    // P x P diagonal, entries k_p
  SpMat Zt;        // P x M bidiagonal, row p: -1 at p, +1 at p+1
  Vec R0t;         // M, e_1
};

inline TimeMatrices assemble_time_matrices(const TimeGrid& grid) {
  const int M = grid.num_nodes();
  const int P = grid.num_elements();
  TimeMatrices tm;

  tm.Tt.resize(M, M);
  tm.Tt.insert(M - 1, M - 1) = 1.0;
  tm.Tt.makeCompressed();

  // CG1 mass: element p contributes k_p/3 to both adjacent diagonals and
  // k_p/6 to the coupling.
  std::vector<Triplet> mt;
  mt.reserve(3 * M);
  for (int p = 0; p < P; ++p) {
    const double k = grid.width(p);
    mt.emplace_back(p, p, k / 3.0);
    mt.emplace_back(p + 1, p + 1, k / 3.0);
    mt.emplace_back(p, p + 1, k / 6.0);
    mt.emplace_back(p + 1, p, k / 6.0);
  }
  tm.Mt.resize(M, M);
  tm.Mt.setFromTriplets(mt.begin(), mt.end());
  tm.Mt.makeCompressed();

  tm.Mt_psi.resize(P, P);
  tm.Mt_psi.reserve(Eigen::VectorXi::Constant(P, 1));
  for (int p = 0; p < P; ++p) tm.Mt_psi.insert(p, p) = grid.width(p);
  tm.Mt_psi.makeCompressed();

  // int over element p of (chi_j)_t = chi_j(t_p) - chi_j(t_{p-1}).
  std::vector<Triplet> zt;
  zt.reserve(2 * P);
  for (int p = 0; p < P; ++p) {
    zt.emplace_back(p, p, -1.0);
    zt.emplace_back(p, p + 1, 1.0);
  }
  tm.Zt.resize(P, M);
  tm.Zt.setFromTriplets(zt.begin(), zt.end());
  tm.Zt.makeCompressed();

  tm.R0t = Vec::Zero(M);
  tm.R0t[0] = 1.0;
  return tm;
}

/// Integrals int_0^T chi_m, m = 1..M (row sums of M_t by partition of unity).
inline Vec hat_integrals(const TimeGrid& grid) {
  const int M = grid.num_nodes();
  Vec v = Vec::Zero(M);
  for (int p = 0; p < grid.num_elements(); ++p) {
    v[p] += 0.5 * grid.width(p);
    v[p + 1] += 0.5 * grid.width(p);
  }
  return v;
}

}  // namespace strb
