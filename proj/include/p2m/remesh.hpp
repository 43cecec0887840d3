#pragma once

#include "p2m/mesh.hpp"

#include <span>

namespace p2m::remesh {

/// Convex hull of a point set as an outward-oriented closed triangle mesh. Points
/// within a relative tolerance of a hull plane are treated as inside.
/// Throws NumericError for fewer than 4 points or (nearly) coplanar input.
Mesh convex_hull(std::span<const Vec3> points);

/// Scalar samples on a regular grid of nodes; node (i, j, k) sits at
/// origin + spacing * (i, j, k). Negative values are inside. Nodes valued exactly
/// zero produce zero-area faces, so callers keep values away from zero.
struct ScalarGrid {
  Vec3 origin = Vec3::Zero();
  double spacing = 1.0;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<double> values;

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  Vec3 position(int i, int j, int k) const { return origin + spacing * Vec3(i, j, k); }
};

/// Zero level set of the piecewise-linear interpolant over the six-tetrahedra split
/// of every grid cell, oriented outward (from negative to non-negative values).
/// The result is a closed 2-manifold when the outermost node layer is non-negative.
Mesh extract_isosurface(const ScalarGrid& grid);

struct ShellConfig {
  std::size_t leaf_budget = 400;  // approximate number of occupied voxels
  double dilation_voxels = 1.0;
  std::size_t target_faces = 1000;

  void validate() const;
};

/// Closed shell around a point cloud: occupied voxels are dilated, the outside is
/// flood filled, and the boundary of the remaining region is extracted, simplified
/// (or refined) to the target face count. Small tunnels close at coarse budgets.
/// Throws NumericError when the budget exceeds the number of points.
Mesh coarse_shell(std::span<const Vec3> points, const ShellConfig& cfg);

/// Watertight manifold re-tessellation of a closed or nearly closed mesh: an
/// unsigned-distance band of about 0.6 voxel is flood filled from outside and the
/// band's outer boundary is extracted. Voxel size is set so that about
/// `leaf_budget` voxels meet the surface. Throws NumericError if the budget cannot
/// resolve the input.
Mesh watertight_remesh(const Mesh& mesh, std::size_t leaf_budget = 20000);

/// Voxel edge length used by watertight_remesh for this mesh and budget.
double remesh_voxel_size(const Mesh& mesh, std::size_t leaf_budget);

/// Quadric-error edge collapse down to `target_faces` (closed meshes lose faces in
/// pairs, so the result may be one below an odd target). Collapses keep the link
/// condition and reject face flips. Logs a warning and stops early if no legal
/// collapse is left. Returns the input when target_faces >= its face count.
Mesh simplify(const Mesh& mesh, std::size_t target_faces);

/// Splits every triangle into four at edge midpoints.
Mesh subdivide(const Mesh& mesh);

/// Subdivides until the mesh has at least `target_faces` faces, then simplifies to it.
Mesh resize(const Mesh& mesh, std::size_t target_faces);

/// Face count of the next level: min(round(growth * faces), max_faces).
std::size_t next_face_count(std::size_t faces, double growth, std::size_t max_faces);

/// Re-tessellates the current mesh and resizes it to next_face_count faces.
Mesh next_level_mesh(const Mesh& current, double face_growth, std::size_t max_faces, std::size_t leaf_budget = 20000);

}  // namespace p2m::remesh
