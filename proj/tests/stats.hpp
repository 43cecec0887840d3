#pragma once

// Goodness-of-fit helpers for sampler tests.

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace stats {

/// Upper-tail p-value of Pearson's statistic for observed counts against expected counts.
inline double chi_square_p(std::span<const double> observed, std::span<const double> expected) {
  double x2 = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double d = observed[i] - expected[i];
    x2 += d * d / expected[i];
  }
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, x2));
}

/// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// P(X < x, Y < y) for (X, Y) uniform on the triangle x, y >= 0, x + y <= 1.
inline double triangle_cdf(double x, double y) {
  x = std::clamp(x, 0.0, 1.0);
  y = std::clamp(y, 0.0, 1.0);
  double area = x * y;
  if (x + y > 1.0) area -= 0.5 * (x + y - 1.0) * (x + y - 1.0);
  return 2.0 * area;
}

/// One-sample two-dimensional Kolmogorov-Smirnov test (Fasano-Franceschini quadrant
/// statistic) of points against the uniform triangle law. Quadrant counts around every
/// point are found with a sweep over x and a Fenwick tree over y ranks.
inline double ks2d_triangle_p(std::span<const std::array<double, 2>> pts) {
  const std::size_t n = pts.size();
  std::vector<std::size_t> by_x(n), by_y(n);
  std::iota(by_x.begin(), by_x.end(), 0);
  std::iota(by_y.begin(), by_y.end(), 0);
  std::sort(by_x.begin(), by_x.end(), [&](auto a, auto b) { return pts[a][0] < pts[b][0]; });
  std::sort(by_y.begin(), by_y.end(), [&](auto a, auto b) { return pts[a][1] < pts[b][1]; });
  std::vector<std::size_t> y_rank(n), x_rank(n);
  for (std::size_t r = 0; r < n; ++r) {
    y_rank[by_y[r]] = r;
    x_rank[by_x[r]] = r;
  }
  std::vector<std::size_t> tree(n + 1, 0);
  auto add = [&](std::size_t i) {
    for (++i; i <= n; i += i & (~i + 1)) ++tree[i];
  };
  auto below = [&](std::size_t i) {  // count of inserted ranks < i
    std::size_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree[i];
    return s;
  };
  const double dn = static_cast<double>(n);
  double d = 0.0;
  for (std::size_t idx : by_x) {
    const double x = pts[idx][0], y = pts[idx][1];
    const double ll = static_cast<double>(below(y_rank[idx]));
    const double nx = static_cast<double>(x_rank[idx]);
    const double ny = static_cast<double>(y_rank[idx]);
    const std::array<double, 4> observed{ll, nx - ll, ny - ll, dn - 1.0 - nx - ny + ll};
    const double f = triangle_cdf(x, y);
    const double px = 1.0 - (1.0 - x) * (1.0 - x);
    const double py = 1.0 - (1.0 - y) * (1.0 - y);
    const std::array<double, 4> model{f, px - f, py - f, 1.0 - px - py + f};
    for (int q = 0; q < 4; ++q) d = std::max(d, std::abs(observed[q] / dn - model[q]));
    add(y_rank[idx]);
  }
  double mx = 0, my = 0;
  for (const auto& p : pts) {
    mx += p[0];
    my += p[1];
  }
  mx /= dn;
  my /= dn;
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : pts) {
    sxx += (p[0] - mx) * (p[0] - mx);
    syy += (p[1] - my) * (p[1] - my);
    sxy += (p[0] - mx) * (p[1] - my);
  }
  const double r = sxy / std::sqrt(sxx * syy);
  const double sq = std::sqrt(dn);
  return kolmogorov_q(d * sq / (1.0 + std::sqrt(1.0 - r * r) * (0.25 - 0.75 / sq)));
}

}  // namespace stats
