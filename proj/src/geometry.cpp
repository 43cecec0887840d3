#include "p2m/geometry.hpp"

#include <algorithm>

namespace p2m {

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double denom = d1 - d3;
    return denom > 0.0 ? Vec3(a + (d1 / denom) * ab) : a;
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double denom = d2 - d6;
    return denom > 0.0 ? Vec3(a + (d2 / denom) * ac) : a;
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double denom = (d4 - d3) + (d5 - d6);
    return denom > 0.0 ? Vec3(b + ((d4 - d3) / denom) * (c - b)) : b;
  }

  const double sum = va + vb + vc;
  if (!(sum > 0.0)) {
    // Degenerate triangle: fall back to the closest of its three edges.
    auto seg = [&](const Vec3& s, const Vec3& t) {
      const Vec3 d = t - s;
      const double l2 = d.squaredNorm();
      const double u = l2 > 0.0 ? std::clamp((p - s).dot(d) / l2, 0.0, 1.0) : 0.0;
      return Vec3(s + u * d);
    };
    Vec3 best = seg(a, b);
    for (const Vec3& q : {seg(b, c), seg(c, a)}) {
      if (squared_distance(p, q) < squared_distance(p, best)) best = q;
    }
    return best;
  }
  const double v = vb / sum;
  const double w = vc / sum;
  return a + v * ab + w * ac;
}

}  // namespace p2m
