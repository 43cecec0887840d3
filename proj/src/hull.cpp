#include "p2m/remesh.hpp"

#include <unordered_map>

namespace p2m::remesh {

namespace {

std::uint64_t directed_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

struct HullFace {
  std::array<int, 3> v;
  Vec3 normal;
  double offset = 0.0;
  bool alive = true;
};

class Hull {
 public:
  Hull(std::span<const Vec3> pts, double tol) : pts_(pts), tol_(tol) {}

  void add_face(int a, int b, int c) {
    HullFace f;
    f.v = {a, b, c};
    f.normal = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]).normalized();
    f.offset = f.normal.dot(pts_[a]);
    const int id = static_cast<int>(faces_.size());
    faces_.push_back(f);
    for (int k = 0; k < 3; ++k) edge_face_[directed_key(f.v[k], f.v[(k + 1) % 3])] = id;
  }

  double distance(int f, const Vec3& p) const { return faces_[f].normal.dot(p) - faces_[f].offset; }

  void insert(int p) {
    const Vec3& q = pts_[p];
    int seed = -1;
    double best = tol_;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      if (!faces_[f].alive) continue;
      const double d = distance(static_cast<int>(f), q);
      if (d > best) {
        best = d;
        seed = static_cast<int>(f);
      }
    }
    if (seed < 0) return;  // inside or on the hull

    // Visible region: faces connected to the seed that see the point.
    std::vector<int> visible{seed};
    std::vector<char> mark(faces_.size(), 0);
    mark[seed] = 1;
    for (std::size_t i = 0; i < visible.size(); ++i) {
      const HullFace& f = faces_[visible[i]];
      for (int k = 0; k < 3; ++k) {
        const int other = edge_face_.at(directed_key(f.v[(k + 1) % 3], f.v[k]));
        if (!mark[other] && distance(other, q) > tol_) {
          mark[other] = 1;
          visible.push_back(other);
        }
      }
    }
    std::vector<std::array<int, 2>> horizon;
    for (int fi : visible) {
      const HullFace& f = faces_[fi];
      for (int k = 0; k < 3; ++k) {
        const int a = f.v[k], b = f.v[(k + 1) % 3];
        if (!mark[edge_face_.at(directed_key(b, a))]) horizon.push_back({a, b});
      }
    }
    for (int fi : visible) {
      HullFace& f = faces_[fi];
      f.alive = false;
      for (int k = 0; k < 3; ++k) edge_face_.erase(directed_key(f.v[k], f.v[(k + 1) % 3]));
    }
    for (const auto& [a, b] : horizon) add_face(a, b, p);
  }

  Mesh result() const {
    std::vector<int> remap(pts_.size(), -1);
    std::vector<Vec3> verts;
    std::vector<Face> faces;
    for (const HullFace& f : faces_) {
      if (!f.alive) continue;
      Face out;
      for (int k = 0; k < 3; ++k) {
        int& r = remap[f.v[k]];
        if (r < 0) {
          r = static_cast<int>(verts.size());
          verts.push_back(pts_[f.v[k]]);
        }
        out[k] = r;
      }
      faces.push_back(out);
    }
    return Mesh(std::move(verts), std::move(faces));
  }

 private:
  std::span<const Vec3> pts_;
  double tol_;
  std::vector<HullFace> faces_;
  std::unordered_map<std::uint64_t, int> edge_face_;
};

}  // namespace

Mesh convex_hull(std::span<const Vec3> points) {
  if (points.size() < 4) throw NumericError("convex_hull: need at least 4 points, got " + std::to_string(points.size()));
  const BoundingBox box = bounding_box(points);
  const double scale = box.diagonal();
  const double tol = 1e-10 * std::max(scale, 1e-300);

  // Initial simplex from extreme points.
  int i0 = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].x() < points[i0].x()) i0 = static_cast<int>(i);
  }
  auto farthest = [&](auto dist) {
    int best = -1;
    double best_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = dist(points[i]);
      if (d > best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return std::pair{best, best_d};
  };
  const auto [i1, d1] = farthest([&](const Vec3& p) { return (p - points[i0]).norm(); });
  const Vec3 axis = (points[i1] - points[i0]).normalized();
  const auto [i2, d2] = farthest([&](const Vec3& p) {
    const Vec3 r = p - points[i0];
    return (r - r.dot(axis) * axis).norm();
  });
  if (d1 <= 10.0 * tol || d2 <= 10.0 * tol) throw NumericError("convex_hull: points are (nearly) collinear");
  const Vec3 n = (points[i1] - points[i0]).cross(points[i2] - points[i0]).normalized();
  const auto [i3, d3] = farthest([&](const Vec3& p) { return std::abs(n.dot(p - points[i0])); });
  if (d3 <= 10.0 * tol) throw NumericError("convex_hull: points are (nearly) coplanar");

  Hull hull(points, tol);
  const bool above = n.dot(points[i3] - points[i0]) > 0.0;
  // Orient the simplex outward: with the fourth point above (i0, i1, i2), that face faces down.
  if (above) {
    hull.add_face(i0, i2, i1);
    hull.add_face(i0, i1, i3);
    hull.add_face(i1, i2, i3);
    hull.add_face(i2, i0, i3);
  } else {
    hull.add_face(i0, i1, i2);
    hull.add_face(i0, i3, i1);
    hull.add_face(i1, i3, i2);
    hull.add_face(i2, i3, i0);
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int p = static_cast<int>(i);
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    hull.insert(p);
  }
  return hull.result();
}

}  // namespace p2m::remesh
