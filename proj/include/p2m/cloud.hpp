#pragma once

#include "p2m/mesh.hpp"

namespace p2m {

/// Target points with optional per-point unit normals.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one per point
  bool oriented = false;      // whether normal signs are trusted

  std::size_t size() const { return points.size(); }
  bool has_normals() const { return !normals.empty(); }
  BoundingBox bounds() const { return bounding_box(points); }

  /// Throws NumericError on an empty cloud, a normal count mismatch, non-finite
  /// values or normals that are not unit length within 1e-6.
  void validate() const;
};

/// Uniform scale about a center: x -> (x - center) * scale.
struct Similarity {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return (p - center) * scale; }
  Vec3 invert(const Vec3& p) const { return p / scale + center; }
  std::vector<Vec3> apply(std::span<const Vec3> pts) const;
  std::vector<Vec3> invert(std::span<const Vec3> pts) const;
  Mesh apply(const Mesh& m) const { return m.with_vertices(apply(m.vertices())); }
  Mesh invert(const Mesh& m) const { return m.with_vertices(invert(m.vertices())); }
};

/// Transform taking the cloud's bounding box to a box centered at the origin with unit diagonal.
Similarity unit_diagonal_frame(const PointCloud& cloud);

/// Points (and normals, unchanged) mapped through `t`.
PointCloud transformed(const PointCloud& cloud, const Similarity& t);

}  // namespace p2m
