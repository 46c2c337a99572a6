#pragma once

#include "ncfem/common.hpp"

#include <array>
#include <string>
#include <vector>

namespace ncfem {

struct Edge {
  std::array<int, 2> v{};          // v[0] < v[1]
  std::array<int, 2> tri{-1, -1};  // tri[0] < tri[1]; tri[1] = -1 on the boundary
  std::array<int, 2> local{-1, -1}; // local edge index within tri[0], tri[1]
  Vec2 normal = Vec2::Zero();      // outward unit normal of tri[0]
  Vec2 tangent = Vec2::Zero();     // normal rotated counterclockwise by 90 degrees
  Vec2 midpoint = Vec2::Zero();
  double length = 0.0;
  bool boundary = false;
};

enum class HConvention { diameter, sqrt_area };

// Immutable 2D simplicial mesh. Triangles are counterclockwise; local edge k is
// opposite local vertex k, i.e. it joins vertices k+1 and k+2 (mod 3).
class Triangulation {
public:
  Triangulation() = default;
  // Builds the edge topology and validates. Throws TopologyError.
  Triangulation(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles);

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_triangles() const { return static_cast<int>(triangles_.size()); }
  int n_edges() const { return static_cast<int>(edges_.size()); }
  int n_interior_edges() const;
  int n_boundary_edges() const { return n_edges() - n_interior_edges(); }
  int n_interior_vertices() const;

  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }

  const Vec2& vertex(int i) const { return vertices_[i]; }
  const std::array<int, 3>& triangle(int t) const { return triangles_[t]; }
  const Edge& edge(int e) const { return edges_[e]; }

  // Global edge index of local edge k of triangle t.
  int triangle_edge(int t, int k) const { return triangle_edges_[t][k]; }
  // +1 if the global edge normal is the outward normal of t, else -1.
  int edge_sign(int t, int k) const { return edge_signs_[t][k]; }
  bool is_boundary_vertex(int v) const { return boundary_vertex_[v]; }

  double area(int t) const;
  double diameter(int t) const;
  Vec2 centroid(int t) const;
  double min_angle() const;
  double h_max(HConvention c = HConvention::diameter) const;
  double total_area() const;

  // Triangles containing each vertex, in increasing triangle order.
  std::vector<std::vector<int>> vertex_triangles() const;

  // Parent triangle in the previous mesh of a red-refinement sequence (empty for base meshes).
  const std::vector<int>& parents() const { return parent_; }

private:
  friend Triangulation red_refine(const Triangulation&);

  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<std::array<int, 3>> edge_signs_;
  std::vector<bool> boundary_vertex_;
  std::vector<int> parent_;
};

struct MeshSize {
  HConvention convention = HConvention::diameter;
  std::vector<double> per_triangle_h;
};

MeshSize mesh_size(const Triangulation& mesh, HConvention convention = HConvention::diameter);

Triangulation unit_square_mesh(int n);
// (-1,1)^2 minus [0,1)x(-1,0], three unit squares each split like unit_square_mesh(n).
Triangulation l_shape_mesh(int n);
Triangulation red_refine(const Triangulation& mesh);

// Ancestor of each fine triangle after `levels` red refinements.
std::vector<int> ancestor_map(const std::vector<const Triangulation*>& chain);

void save_mesh(const Triangulation& mesh, const std::string& path);
Triangulation load_mesh(const std::string& path);
std::string mesh_to_string(const Triangulation& mesh);
Triangulation mesh_from_string(const std::string& text);

// Barycentric coordinates of p with respect to triangle t.
std::array<double, 3> barycentric(const Triangulation& mesh, int t, const Vec2& p);

} // namespace ncfem
