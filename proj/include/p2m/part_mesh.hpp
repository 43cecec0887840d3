#pragma once

#include "p2m/mesh.hpp"

#include <string>

namespace p2m {

/// One overlapping piece of a PartMesh. Local indices map back into the parent.
struct MeshPart {
  Mesh mesh;
  std::vector<int> vertex_map;  // local vertex -> parent vertex
  std::vector<int> face_map;    // local face -> parent face
  std::vector<int> edge_map;    // local edge -> parent edge
  BoundingBox region;           // dilated grid cell (only the two grid axes are meaningful)
};

/// A mesh partitioned into overlapping sub-meshes along an n x n grid spanning the
/// two longest bounding-box axes.
struct PartMesh {
  Mesh parent;
  std::vector<MeshPart> parts;
  std::array<int, 2> grid_axes{0, 1};
  int grid_n = 1;
  double margin = 0.0;  // absolute dilation applied to every grid cell
  std::vector<std::string> warnings;

  std::size_t size() const { return parts.size(); }

  /// True when `p` lies inside the dilated region of part `i` (grid axes only).
  bool region_contains(std::size_t i, const Vec3& p) const;
};

/// Bins vertices into an n x n grid over the two longest bbox axes, dilates every
/// cell by `overlap_margin` times the bbox diagonal, and gives each part every face
/// touching a vertex in its dilated cell. Empty parts are dropped with a warning.
PartMesh split_into_parts(const Mesh& mesh, int grid_n, double overlap_margin = 0.05);

/// Rebuilds the parent mesh: each vertex is the arithmetic mean of its positions in
/// every part containing it.
Mesh merge_parts(const PartMesh& part_mesh, std::span<const std::vector<Vec3>> displaced_parts);

}  // namespace p2m
