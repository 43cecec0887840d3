#pragma once

#include "p2m/common.hpp"

namespace p2m {

/// Closest point to p on the triangle (a, b, c), exact region classification
/// (vertex, edge or interior Voronoi region).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

inline double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  return (p - closest_point_on_triangle(p, a, b, c)).norm();
}

}  // namespace p2m
