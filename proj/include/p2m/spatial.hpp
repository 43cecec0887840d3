#pragma once

#include "p2m/common.hpp"

#include <optional>
#include <span>

namespace p2m {

struct Neighbor {
  int index = -1;
  double distance = 0.0;
};

/// Static kd-tree over a point set. Every query returns exactly what a brute-force
/// scan returns, with ties broken by the lowest point index.
class PointIndex {
 public:
  PointIndex() = default;
  explicit PointIndex(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Vec3>& points() const { return points_; }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  Neighbor nearest(const Vec3& query) const;

  /// The k closest points in ascending (distance, index) order. Throws if k > size().
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

  /// Index of the cloud point with the smallest positive projection onto the ray
  /// among those within `radius` of the ray's supporting line.
  std::optional<int> beam_query(const Vec3& origin, const Vec3& direction, double radius) const;

 private:
  struct Node {
    BoundingBox box;
    int begin = 0, end = 0;    // range into order_
    int left = -1, right = -1;  // children, -1 for leaves
  };

  int build(int begin, int end, int depth);
  void nearest_rec(int node, const Vec3& q, double& best_d2, int& best_i) const;
  void knn_rec(int node, const Vec3& q, std::size_t k, std::vector<std::pair<double, int>>& heap) const;
  void beam_rec(int node, const Vec3& o, const Vec3& d, double r2, double& best_t, int& best_i) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

/// Linear-scan reference used by tests and by the brute-force Chamfer oracle.
Neighbor brute_force_nearest(std::span<const Vec3> points, const Vec3& query);
std::vector<Neighbor> brute_force_knn(std::span<const Vec3> points, const Vec3& query, std::size_t k);

/// Convenience wrapper over PointIndex::beam_query returning the hit position.
std::optional<Vec3> beam_intersect(const PointIndex& cloud, const Vec3& origin, const Vec3& direction,
                                   double epsilon);

/// Good-fit test for the beam-gap loss. mask[i] is true when one of the k nearest
/// targets of sample i has sample i among its own k nearest samples.
std::vector<bool> mutual_knn_mask(std::span<const Vec3> samples, const PointIndex& targets, std::size_t k);

/// Mean distance from each point to its nearest other point.
double mean_spacing(const PointIndex& index);

}  // namespace p2m
