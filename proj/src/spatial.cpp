#include "p2m/spatial.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace p2m {

namespace {

constexpr int kLeafSize = 8;

bool closer(double d2a, int ia, double d2b, int ib) { return d2a < d2b || (d2a == d2b && ia < ib); }

double box_distance2(const BoundingBox& box, const Vec3& q) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double lo = box.min[a] - q[a];
    const double hi = q[a] - box.max[a];
    const double d = std::max({lo, hi, 0.0});
    d2 += d * d;
  }
  return d2;
}

}  // namespace

PointIndex::PointIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<int>(points_.size()), 0);
  }
}

int PointIndex::build(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  BoundingBox box;
  for (int i = begin; i < end; ++i) box.extend(points_[order_[i]]);
  nodes_[id].box = box;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  const Vec3 ext = box.extent();
  int axis = 0;
  if (ext[1] > ext[axis]) axis = 1;
  if (ext[2] > ext[axis]) axis = 2;
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
    const double pa = points_[a][axis];
    const double pb = points_[b][axis];
    return pa < pb || (pa == pb && a < b);
  });
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void PointIndex::nearest_rec(int node, const Vec3& q, double& best_d2, int& best_i) const {
  const Node& n = nodes_[node];
  if (box_distance2(n.box, q) > best_d2) return;
  if (n.left < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int p = order_[i];
      const double d2 = squared_distance(points_[p], q);
      if (closer(d2, p, best_d2, best_i)) {
        best_d2 = d2;
        best_i = p;
      }
    }
    return;
  }
  const double dl = box_distance2(nodes_[n.left].box, q);
  const double dr = box_distance2(nodes_[n.right].box, q);
  if (dl <= dr) {
    nearest_rec(n.left, q, best_d2, best_i);
    nearest_rec(n.right, q, best_d2, best_i);
  } else {
    nearest_rec(n.right, q, best_d2, best_i);
    nearest_rec(n.left, q, best_d2, best_i);
  }
}

Neighbor PointIndex::nearest(const Vec3& query) const {
  if (points_.empty()) throw Error("nearest: empty point index");
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_i = std::numeric_limits<int>::max();
  nearest_rec(0, query, best_d2, best_i);
  return {best_i, std::sqrt(best_d2)};
}

void PointIndex::knn_rec(int node, const Vec3& q, std::size_t k, std::vector<std::pair<double, int>>& heap) const {
  const Node& n = nodes_[node];
  if (heap.size() == k && box_distance2(n.box, q) > heap.front().first) return;
  if (n.left < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int p = order_[i];
      const std::pair<double, int> cand{squared_distance(points_[p], q), p};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const double dl = box_distance2(nodes_[n.left].box, q);
  const double dr = box_distance2(nodes_[n.right].box, q);
  if (dl <= dr) {
    knn_rec(n.left, q, k, heap);
    knn_rec(n.right, q, k, heap);
  } else {
    knn_rec(n.right, q, k, heap);
    knn_rec(n.left, q, k, heap);
  }
}

std::vector<Neighbor> PointIndex::knn(const Vec3& query, std::size_t k) const {
  if (k > points_.size()) {
    throw Error("knn: k = " + std::to_string(k) + " exceeds point count " + std::to_string(points_.size()));
  }
  std::vector<std::pair<double, int>> heap;
  heap.reserve(k + 1);
  if (k > 0) knn_rec(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  std::vector<Neighbor> out;
  out.reserve(k);
  for (const auto& [d2, i] : heap) out.push_back({i, std::sqrt(d2)});
  return out;
}

void PointIndex::beam_rec(int node, const Vec3& o, const Vec3& d, double r2, double& best_t, int& best_i) const {
  const Node& n = nodes_[node];
  // Conservative bounds from the node's bounding sphere.
  const Vec3 c = n.box.center();
  const double rad = 0.5 * n.box.extent().norm();
  const Vec3 oc = c - o;
  const double tc = oc.dot(d);
  if (tc + rad <= 0.0) return;       // entirely behind the origin
  if (tc - rad > best_t) return;     // cannot beat the current hit
  const double perp = std::sqrt(std::max(0.0, oc.squaredNorm() - tc * tc));
  const double reach = std::sqrt(r2) + rad;
  if (perp > reach) return;
  if (n.left < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int p = order_[i];
      const Vec3 op = points_[p] - o;
      const double t = op.dot(d);
      if (t <= 0.0) continue;
      const double perp2 = op.squaredNorm() - t * t;
      if (perp2 > r2) continue;
      if (t < best_t || (t == best_t && p < best_i)) {
        best_t = t;
        best_i = p;
      }
    }
    return;
  }
  const double tl = (nodes_[n.left].box.center() - o).dot(d);
  const double tr = (nodes_[n.right].box.center() - o).dot(d);
  if (tl <= tr) {
    beam_rec(n.left, o, d, r2, best_t, best_i);
    beam_rec(n.right, o, d, r2, best_t, best_i);
  } else {
    beam_rec(n.right, o, d, r2, best_t, best_i);
    beam_rec(n.left, o, d, r2, best_t, best_i);
  }
}

std::optional<int> PointIndex::beam_query(const Vec3& origin, const Vec3& direction, double radius) const {
  if (points_.empty()) return std::nullopt;
  double best_t = std::numeric_limits<double>::infinity();
  int best_i = std::numeric_limits<int>::max();
  beam_rec(0, origin, direction, radius * radius, best_t, best_i);
  if (best_i == std::numeric_limits<int>::max()) return std::nullopt;
  return best_i;
}

Neighbor brute_force_nearest(std::span<const Vec3> points, const Vec3& query) {
  if (points.empty()) throw Error("nearest: empty point set");
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_i = -1;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d2 = squared_distance(points[i], query);
    if (d2 < best_d2) {
      best_d2 = d2;
      best_i = static_cast<int>(i);
    }
  }
  return {best_i, std::sqrt(best_d2)};
}

std::vector<Neighbor> brute_force_knn(std::span<const Vec3> points, const Vec3& query, std::size_t k) {
  if (k > points.size()) throw Error("knn: k exceeds point count");
  std::vector<std::pair<double, int>> all;
  all.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) all.emplace_back(squared_distance(points[i], query), static_cast<int>(i));
  std::sort(all.begin(), all.end());
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back({all[i].second, std::sqrt(all[i].first)});
  return out;
}

std::optional<Vec3> beam_intersect(const PointIndex& cloud, const Vec3& origin, const Vec3& direction,
                                   double epsilon) {
  if (!(epsilon > 0.0)) throw Error("beam_intersect: epsilon must be positive");
  const auto hit = cloud.beam_query(origin, direction, epsilon);
  if (!hit) return std::nullopt;
  return cloud.point(static_cast<std::size_t>(*hit));
}

std::vector<bool> mutual_knn_mask(std::span<const Vec3> samples, const PointIndex& targets, std::size_t k) {
  std::vector<bool> mask(samples.size(), false);
  if (samples.empty() || targets.empty()) return mask;
  const std::size_t k_targets = std::min(k, targets.size());
  const std::size_t k_samples = std::min(k, samples.size());
  const PointIndex sample_index(std::vector<Vec3>(samples.begin(), samples.end()));
  std::unordered_map<int, std::vector<Neighbor>> target_knn;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (const Neighbor& t : targets.knn(samples[i], k_targets)) {
      auto it = target_knn.find(t.index);
      if (it == target_knn.end()) {
        it = target_knn.emplace(t.index, sample_index.knn(targets.point(t.index), k_samples)).first;
      }
      const bool reciprocal = std::any_of(it->second.begin(), it->second.end(),
                                          [&](const Neighbor& s) { return s.index == static_cast<int>(i); });
      if (reciprocal) {
        mask[i] = true;
        break;
      }
    }
  }
  return mask;
}

double mean_spacing(const PointIndex& index) {
  if (index.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < index.size(); ++i) total += index.knn(index.point(i), 2)[1].distance;
  return total / static_cast<double>(index.size());
}

}  // namespace p2m
