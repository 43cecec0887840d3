#pragma once

#include "p2m/common.hpp"

#include <span>

namespace p2m {

using Edge = std::array<int, 2>;

/// Edge-centric connectivity of a triangle mesh.
///
/// Edges are stored as (lo, hi) vertex pairs sorted lexicographically. For an edge
/// with incident faces f1 < f2, the neighbor stencil is
///   (a, b, c, d) = (next edge in f1, previous edge in f1, next edge in f2, previous edge in f2)
/// where next/previous follow the stored winding of each face. A boundary edge has
/// no f2 and repeats (a, b) in the last two slots.
struct EdgeTopology {
  std::vector<Edge> edges;
  std::vector<std::array<int, 4>> neighbors;
  std::vector<std::array<int, 2>> faces;  // faces[e][1] == -1 on a boundary edge
  std::vector<std::array<int, 3>> face_edges;

  std::size_t size() const { return edges.size(); }
  bool is_boundary(std::size_t e) const { return faces[e][1] < 0; }
};

/// Builds the edge list, the 4-neighbor stencil and the edge-face incidence.
/// Throws MeshError naming the edge if three or more faces share it.
EdgeTopology build_edge_adjacency(std::span<const Face> faces, std::size_t vertex_count);

/// Triangle mesh. Connectivity is fixed at construction; only vertex positions change.
class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<Vec3> vertices, std::vector<Face> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const EdgeTopology& topology() const { return topology_; }
  const std::vector<Edge>& edges() const { return topology_.edges; }
  const std::vector<std::array<int, 4>>& edge_neighbors() const { return topology_.neighbors; }
  const std::vector<std::array<int, 2>>& edge_faces() const { return topology_.faces; }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t face_count() const { return faces_.size(); }
  std::size_t edge_count() const { return topology_.edges.size(); }
  bool empty() const { return faces_.empty(); }

  /// Replaces the vertex positions; the count must match.
  void set_vertices(std::vector<Vec3> vertices);
  Mesh with_vertices(std::vector<Vec3> vertices) const;

  /// V - E + F.
  long euler_characteristic() const;

  Vec3 face_normal(std::size_t f) const;  // unit length, zero for degenerate faces
  double face_area(std::size_t f) const;
  double surface_area() const;
  BoundingBox bounds() const { return bounding_box(vertices_); }

 private:
  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  EdgeTopology topology_;
};

/// True iff every edge has exactly two incident faces and the surface is orientable.
bool is_watertight(const Mesh& mesh);

/// True iff the surface admits a consistent orientation (per connected component).
bool is_orientable(const Mesh& mesh);

/// True iff every interior edge is traversed in opposite directions by its two faces.
bool is_consistently_oriented(const Mesh& mesh);

/// Number of face-connected components.
std::size_t component_count(const Mesh& mesh);

/// Total genus of a closed orientable mesh, summed over components: (2C - chi) / 2.
long genus(const Mesh& mesh);

/// Signed enclosed volume (positive for outward-facing closed meshes).
double signed_volume(const Mesh& mesh);

/// Copy of the mesh with every face winding reversed.
Mesh flipped(const Mesh& mesh);

/// Drops unreferenced vertices and renumbers faces.
Mesh remove_unreferenced_vertices(const Mesh& mesh);

}  // namespace p2m
