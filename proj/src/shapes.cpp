#include "p2m/shapes.hpp"

#include "p2m/remesh.hpp"

#include <map>

namespace p2m::shapes {

Mesh tetrahedron() {
  std::vector<Vec3> v{{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
  std::vector<Face> f{{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return {std::move(v), std::move(f)};
}

Mesh cube(double s) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) v.emplace_back(i & 1 ? s : -s, i & 2 ? s : -s, i & 4 ? s : -s);
  std::vector<Face> f{{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                      {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return {std::move(v), std::move(f)};
}

Mesh icosahedron() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& p : v) p.normalize();
  std::vector<Face> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  return {std::move(v), std::move(f)};
}

Mesh icosphere(int level, double radius) {
  Mesh base = icosahedron();
  std::vector<Vec3> v = base.vertices();
  std::vector<Face> f = base.faces();
  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<Face> next;
    next.reserve(f.size() * 4);
    for (const Face& t : f) {
      const int ab = midpoint(t[0], t[1]);
      const int bc = midpoint(t[1], t[2]);
      const int ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }
  for (Vec3& p : v) p *= radius;
  return {std::move(v), std::move(f)};
}

Mesh torus(double major_radius, double minor_radius, int nu, int nv) {
  std::vector<Vec3> v;
  std::vector<Face> f;
  for (int i = 0; i < nu; ++i) {
    const double u = 2.0 * std::numbers::pi * i / nu;
    for (int j = 0; j < nv; ++j) {
      const double w = 2.0 * std::numbers::pi * j / nv;
      const double r = major_radius + minor_radius * std::cos(w);
      v.emplace_back(r * std::cos(u), r * std::sin(u), minor_radius * std::sin(w));
    }
  }
  auto id = [&](int i, int j) { return ((i + nu) % nu) * nv + (j + nv) % nv; };
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      f.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      f.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return {std::move(v), std::move(f)};
}

Mesh peanut(int level, double length, double pinch, double waist_width) {
  Mesh sphere = icosphere(level);
  std::vector<Vec3> v = sphere.vertices();
  for (Vec3& p : v) {
    const double x = length * p.x();
    const double s = 1.0 - pinch * std::exp(-(x / waist_width) * (x / waist_width));
    p = Vec3(x, s * p.y(), s * p.z());
  }
  return sphere.with_vertices(std::move(v));
}

Mesh cup(int resolution) {
  if (resolution < 8) throw NumericError("cup: resolution must be at least 8");
  // Exact distance to the box [-1, 1]^3 minus the pocket [-0.5, 0.5]^2 x [-0.6, inf).
  auto box_distance = [](const Vec3& p, const Vec3& center, const Vec3& half) {
    const Vec3 q = (p - center).cwiseAbs() - half;
    return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
  };
  const double h = 2.0 / resolution;
  remesh::ScalarGrid g;
  g.spacing = h;
  g.origin = Vec3::Constant(-1.0 - 2.5 * h);
  const int n = resolution + 6;
  g.dims = {n, n, n};
  g.values.resize(static_cast<std::size_t>(n) * n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec3 p = g.position(i, j, k);
        const double outer = box_distance(p, Vec3::Zero(), Vec3::Ones());
        const double pocket = box_distance(p, Vec3(0, 0, 0.7), Vec3(0.5, 0.5, 1.3));
        double v = std::max(outer, -pocket);
        if (std::abs(v) < 1e-6 * h) v = 1e-6 * h;
        g.values[g.index(i, j, k)] = v;
      }
  return remesh::extract_isosurface(g);
}

}  // namespace p2m::shapes
