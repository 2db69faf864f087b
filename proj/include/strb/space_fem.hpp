// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <vector>

#include "strb/common.hpp"
#include "strb/mesh.hpp"

namespace strb {

/// Free (non-Dirichlet) vertex numbering in vertex order: entry v is the free
/// index of vertex v, or -1 for constrained vertices.
inline std::vector<int> free_index_map(const SpaceMesh& mesh) {
  std::vector<int> map(mesh.num_vertices(), -1);
  int next = 0;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (!mesh.dirichlet[v]) map[v] = next++;
  return map;
}

/// CG1 spatial operators restricted to free vertices: the lumped mass matrix
/// (row sums of the consistent mass), one SPSD stiffness block per subdomain
/// label, and the exact edge-integrated boundary load vectors.
struct SpaceMatrices {
  int num_free = 0;                      // N
  int num_vertices = 0;                  // all vertices, reported in logs
  std::vector<int> free_index;           // vertex -> free index or -1
  Vec mass_lumped;                       // N, diagonal entries
  Vec mass_lumped_full;                  // all vertices, pre-elimination
  std::vector<int> labels;               // subdomain labels, increasing
  std::vector<SpMat> stiffness;          // per label, N x N
  std::map<BoundaryTag, Vec> boundary_loads;  // per tag present in the mesh
};

/// Local CG1 stiffness of a triangle (a, b, c):
/// K_ij = area * grad(lambda_i) . grad(lambda_j), with
/// grad(lambda_i) = perp(edge opposite i) / (2 area). Exact, no quadrature.
inline Eigen::Matrix3d local_stiffness(const Eigen::Vector2d& a,
                                       const Eigen::Vector2d& b,
                                       const Eigen::Vector2d& c) {
  const double area2 = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
  Eigen::Matrix<double, 2, 3> grad;
  grad.col(0) << b[1] - c[1], c[0] - b[0];
  grad.col(1) << c[1] - a[1], a[0] - c[0];
  grad.col(2) << a[1] - b[1], b[0] - a[0];
  grad /= area2;
  return (0.5 * area2) * grad.transpose() * grad;
}

/// Entry n = integral of phi_n over the edges carrying `tag`, restricted to
/// free vertices. Tags with no edges yield the zero vector.
inline Vec assemble_boundary_load(const SpaceMesh& mesh, BoundaryTag tag) {
  const auto free = free_index_map(mesh);
  int num_free = 0;
  for (int v : free)
    if (v >= 0) ++num_free;
  Vec load = Vec::Zero(num_free);
  for (const auto& e : mesh.boundary_edges) {
    if (e.tag != tag) continue;
    const double len = (mesh.vertices.row(e.b) - mesh.vertices.row(e.a)).norm();
    // int over the edge of the linear hat = len / 2 per endpoint
    if (free[e.a] >= 0) load[free[e.a]] += 0.5 * len;
    if (free[e.b] >= 0) load[free[e.b]] += 0.5 * len;
  }
  return load;
}

inline SpaceMatrices assemble_space_matrices(const SpaceMesh& mesh) {
  validate_mesh(mesh);
  SpaceMatrices sm;
  sm.num_vertices = mesh.num_vertices();
  sm.free_index = free_index_map(mesh);
  for (int v : sm.free_index)
    if (v >= 0) ++sm.num_free;
  sm.labels = mesh.subdomain_labels();

  std::map<int, int> label_pos;
  for (size_t q = 0; q < sm.labels.size(); ++q) label_pos[sm.labels[q]] = static_cast<int>(q);

  sm.mass_lumped_full = Vec::Zero(mesh.num_vertices());
  std::vector<std::vector<Triplet>> stiff_triplets(sm.labels.size());

  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Eigen::Vector2d a = mesh.vertices.row(tri[0]);
    const Eigen::Vector2d b = mesh.vertices.row(tri[1]);
    const Eigen::Vector2d c = mesh.vertices.row(tri[2]);
    const double area = mesh.triangle_area(t);

    // lumped mass: consistent CG1 row sums give area/3 per vertex
    for (int i = 0; i < 3; ++i) sm.mass_lumped_full[tri[i]] += area / 3.0;

    const Eigen::Matrix3d k = local_stiffness(a, b, c);
    auto& trips = stiff_triplets[label_pos[mesh.subdomain[t]]];
    for (int i = 0; i < 3; ++i) {
      const int fi = sm.free_index[tri[i]];
      if (fi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int fj = sm.free_index[tri[j]];
        if (fj < 0) continue;
        trips.emplace_back(fi, fj, k(i, j));
      }
    }
  }

  sm.mass_lumped = Vec::Zero(sm.num_free);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (sm.free_index[v] >= 0) sm.mass_lumped[sm.free_index[v]] = sm.mass_lumped_full[v];

  for (size_t q = 0; q < sm.labels.size(); ++q) {
    SpMat A(sm.num_free, sm.num_free);
    A.setFromTriplets(stiff_triplets[q].begin(), stiff_triplets[q].end());
    A.prune(0.0);
    A.makeCompressed();
    sm.stiffness.push_back(std::move(A));
  }

  for (BoundaryTag tag : {BoundaryTag::Bottom, BoundaryTag::Right,
                          BoundaryTag::Top, BoundaryTag::Left}) {
    bool present = false;
    for (const auto& e : mesh.boundary_edges) present |= (e.tag == tag);
    if (present) sm.boundary_loads[tag] = assemble_boundary_load(mesh, tag);
  }
  return sm;
}

}  // namespace strb
