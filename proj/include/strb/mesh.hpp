// Copyright (c) 2026 The strb authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "strb/common.hpp"

namespace strb {

enum class BoundaryTag { Bottom = 0, Right = 1, Top = 2, Left = 3 };

inline const char* to_string(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Bottom: return "bottom";
    case BoundaryTag::Right: return "right";
    case BoundaryTag::Top: return "top";
    case BoundaryTag::Left: return "left";
  }
  return "?";
}

inline BoundaryTag boundary_tag_from_string(const std::string& s) {
  if (s == "bottom") return BoundaryTag::Bottom;
  if (s == "right") return BoundaryTag::Right;
  if (s == "top") return BoundaryTag::Top;
  if (s == "left") return BoundaryTag::Left;
  throw InvalidArgument("unknown boundary tag '" + s + "'");
}

/// Conforming triangulation with per-triangle subdomain labels, tagged
/// boundary edges and a Dirichlet vertex mask.
struct SpaceMesh {
  Eigen::Matrix<double, Eigen::Dynamic, 2> vertices;
  std::vector<std::array<int, 3>> triangles;   // CCW vertex indices
  std::vector<int> subdomain;                  // per triangle, 1-based label
  struct Edge {
    int a, b;
    BoundaryTag tag;
  };
  std::vector<Edge> boundary_edges;
  std::vector<char> dirichlet;                 // per vertex

  int num_vertices() const { return static_cast<int>(vertices.rows()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const {
    const auto& tri = triangles[t];
    const auto a = vertices.row(tri[0]);
    const auto b = vertices.row(tri[1]);
    const auto c = vertices.row(tri[2]);
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
  }

  double total_area() const {
    double s = 0.0;
    for (int t = 0; t < num_triangles(); ++t) s += triangle_area(t);
    return s;
  }

  /// Distinct subdomain labels in increasing order.
  std::vector<int> subdomain_labels() const {
    std::map<int, int> seen;
    for (int label : subdomain) seen[label] = 1;
    std::vector<int> out;
    for (auto& kv : seen) out.push_back(kv.first);
    return out;
  }
};

/// Conformity checks: positive orientation, every interior edge shared by
/// exactly two triangles, labels present. Throws on violation.
inline void validate_mesh(const SpaceMesh& mesh) {
  require(mesh.num_vertices() >= 3, "mesh needs at least 3 vertices");
  require(mesh.subdomain.size() == mesh.triangles.size(),
          "every triangle needs a subdomain label");
  require(mesh.dirichlet.size() == static_cast<size_t>(mesh.num_vertices()),
          "dirichlet mask size mismatch");
  std::map<std::pair<int, int>, int> edge_count;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    require(mesh.triangle_area(t) > 0.0, "triangle " + std::to_string(t) +
            " is degenerate or negatively oriented");
    const auto& tri = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      require(a >= 0 && a < mesh.num_vertices() && b >= 0 && b < mesh.num_vertices(),
              "triangle vertex index out of range");
      if (a > b) std::swap(a, b);
      edge_count[{a, b}]++;
    }
  }
  int boundary = 0;
  for (auto& kv : edge_count) {
    require(kv.second <= 2, "non-conforming edge shared by more than 2 triangles");
    if (kv.second == 1) ++boundary;
  }
  require(boundary == static_cast<int>(mesh.boundary_edges.size()),
          "boundary edge list does not match the mesh boundary");
}

/// Structured thermal-block mesh on the unit square: (n-1)^2 cells, two
/// triangles per cell with alternating diagonals, 3x3 subdomain layout
/// (labels 1..9, row-wise from the bottom-left block), boundary edges tagged
/// by side, Dirichlet mask on the top edge.
inline SpaceMesh build_thermal_block_mesh(int vertices_per_side) {
  require(vertices_per_side >= 4,
          "vertices_per_side must be >= 4 so every block contains a cell");
  require((vertices_per_side - 1) % 3 == 0,
          "vertices_per_side - 1 must be divisible by 3 so subdomain "
          "boundaries align with mesh lines");
  const int n = vertices_per_side;
  const int cells = n - 1;
  const double h = 1.0 / cells;

  SpaceMesh mesh;
  mesh.vertices.resize(n * n, 2);
  auto vid = [n](int i, int j) { return j * n + i; };  // i: x index, j: y index
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      mesh.vertices(vid(i, j), 0) = i * h;
      mesh.vertices(vid(i, j), 1) = j * h;
    }

  const int cells_per_block = cells / 3;
  for (int cj = 0; cj < cells; ++cj)
    for (int ci = 0; ci < cells; ++ci) {
      const int v00 = vid(ci, cj), v10 = vid(ci + 1, cj);
      const int v01 = vid(ci, cj + 1), v11 = vid(ci + 1, cj + 1);
      const int block = 1 + (ci / cells_per_block) + 3 * (cj / cells_per_block);
      if ((ci + cj) % 2 == 0) {
        // diagonal v00 - v11
        mesh.triangles.push_back({v00, v10, v11});
        mesh.triangles.push_back({v00, v11, v01});
      } else {
        // diagonal v10 - v01
        mesh.triangles.push_back({v00, v10, v01});
        mesh.triangles.push_back({v10, v11, v01});
      }
      mesh.subdomain.push_back(block);
      mesh.subdomain.push_back(block);
    }

  for (int c = 0; c < cells; ++c) {
    mesh.boundary_edges.push_back({vid(c, 0), vid(c + 1, 0), BoundaryTag::Bottom});
    mesh.boundary_edges.push_back({vid(n - 1, c), vid(n - 1, c + 1), BoundaryTag::Right});
    mesh.boundary_edges.push_back({vid(c, n - 1), vid(c + 1, n - 1), BoundaryTag::Top});
    mesh.boundary_edges.push_back({vid(0, c), vid(0, c + 1), BoundaryTag::Left});
  }

  mesh.dirichlet.assign(n * n, 0);
  for (int i = 0; i < n; ++i) mesh.dirichlet[vid(i, n - 1)] = 1;

  validate_mesh(mesh);
  return mesh;
}

/// Line-oriented text format for debugging; see README for the schema.
inline void write_mesh_text(const SpaceMesh& mesh, std::ostream& os) {
  os << "# strb mesh v1\n";
  os << "vertices " << mesh.num_vertices() << "\n";
  os.precision(17);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    os << mesh.vertices(v, 0) << " " << mesh.vertices(v, 1) << "\n";
  os << "triangles " << mesh.num_triangles() << "\n";
  for (int t = 0; t < mesh.num_triangles(); ++t)
    os << mesh.triangles[t][0] << " " << mesh.triangles[t][1] << " "
       << mesh.triangles[t][2] << " " << mesh.subdomain[t] << "\n";
  os << "boundary_edges " << mesh.boundary_edges.size() << "\n";
  for (const auto& e : mesh.boundary_edges)
    os << e.a << " " << e.b << " " << to_string(e.tag) << "\n";
  os << "dirichlet";
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mesh.dirichlet[v]) os << " " << v;
  os << "\n";
}

inline SpaceMesh read_mesh_text(std::istream& is) {
  SpaceMesh mesh;
  std::string token;
  is >> token;
  if (token == "#") {
    std::string line;
    std::getline(is, line);  // skip the header comment
    is >> token;
  }
  if (token != "vertices") throw IoError("mesh file: expected 'vertices'");
  int nv = 0;
  is >> nv;
  if (!is || nv < 3) throw IoError("mesh file: bad vertex count");
  mesh.vertices.resize(nv, 2);
  for (int v = 0; v < nv; ++v) is >> mesh.vertices(v, 0) >> mesh.vertices(v, 1);
  is >> token;
  if (token != "triangles") throw IoError("mesh file: expected 'triangles'");
  int nt = 0;
  is >> nt;
  for (int t = 0; t < nt; ++t) {
    std::array<int, 3> tri{};
    int label = 0;
    is >> tri[0] >> tri[1] >> tri[2] >> label;
    mesh.triangles.push_back(tri);
    mesh.subdomain.push_back(label);
  }
  is >> token;
  if (token != "boundary_edges") throw IoError("mesh file: expected 'boundary_edges'");
  int ne = 0;
  is >> ne;
  for (int e = 0; e < ne; ++e) {
    int a = 0, b = 0;
    std::string tag;
    is >> a >> b >> tag;
    mesh.boundary_edges.push_back({a, b, boundary_tag_from_string(tag)});
  }
  is >> token;
  if (token != "dirichlet") throw IoError("mesh file: expected 'dirichlet'");
  mesh.dirichlet.assign(nv, 0);
  int v;
  while (is >> v) {
    if (v < 0 || v >= nv) throw IoError("mesh file: dirichlet index out of range");
    mesh.dirichlet[v] = 1;
  }
  if (!is.eof() && is.fail()) is.clear();
  validate_mesh(mesh);
  return mesh;
}

}  // namespace strb
