#include "p2m/cloud.hpp"

namespace p2m {

void PointCloud::validate() const {
  if (points.empty()) throw NumericError("point cloud is empty");
  if (!normals.empty() && normals.size() != points.size()) {
    throw NumericError("point cloud has " + std::to_string(normals.size()) + " normals for " +
                       std::to_string(points.size()) + " points");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) throw NumericError("point " + std::to_string(i) + " is not finite");
  }
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (!(std::abs(normals[i].norm() - 1.0) <= 1e-6)) throw NumericError("normal " + std::to_string(i) + " is not unit length");
  }
}

std::vector<Vec3> Similarity::apply(std::span<const Vec3> pts) const {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) out.push_back(apply(p));
  return out;
}

std::vector<Vec3> Similarity::invert(std::span<const Vec3> pts) const {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) out.push_back(invert(p));
  return out;
}

Similarity unit_diagonal_frame(const PointCloud& cloud) {
  if (cloud.points.empty()) throw NumericError("unit_diagonal_frame: empty cloud");
  const BoundingBox box = cloud.bounds();
  const double diag = box.diagonal();
  if (!(diag > 0.0)) throw NumericError("unit_diagonal_frame: all points coincide");
  return {0.5 * (box.min + box.max), 1.0 / diag};
}

PointCloud transformed(const PointCloud& cloud, const Similarity& t) {
  PointCloud out = cloud;
  out.points = t.apply(cloud.points);
  return out;
}

}  // namespace p2m
