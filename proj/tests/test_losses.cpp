#include "p2m/losses.hpp"
#include "p2m/shapes.hpp"

#include "gradcheck.hpp"
#include "stats.hpp"

#include <gtest/gtest.h>

using namespace p2m;
using namespace p2m::loss;

namespace {

std::vector<Vec3> random_points(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<Vec3> p(n);
  for (auto& v : p) v = Vec3(rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale));
  return p;
}

Tensor<double> to_tensor(const std::vector<Vec3>& pts) { return point_rows<double>(pts); }

Tensor<double> randn(ad::Shape s, Rng& rng) {
  Tensor<double> t(std::move(s));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

// Sample batch with given positions and normals as leaves of `tape`.
SampleBatch<double> batch(Tape<double>& tape, const std::vector<Vec3>& pos, const std::vector<Vec3>& nrm) {
  SampleBatch<double> b{tape.variable(to_tensor(pos)), tape.variable(to_tensor(nrm)), {}};
  b.draws.face.assign(pos.size(), 0);
  b.draws.bary.assign(pos.size(), {0.0, 0.0});
  return b;
}

double brute_chamfer(const std::vector<Vec3>& x, const std::vector<Vec3>& y, bool squared) {
  double a = 0.0, b = 0.0;
  for (const Vec3& p : x) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& q : y) best = std::min(best, squared_distance(p, q));
    a += squared ? best : std::sqrt(best);
  }
  for (const Vec3& q : y) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& p : x) best = std::min(best, squared_distance(p, q));
    b += squared ? best : std::sqrt(best);
  }
  return a + b;
}

// First point along the ray within `radius` of its line, ties by lowest index.
std::optional<int> brute_beam(const std::vector<Vec3>& cloud, const Vec3& o, const Vec3& dir, double radius) {
  const Vec3 d = dir.normalized();
  std::optional<int> best;
  double best_t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double t = (cloud[i] - o).dot(d);
    if (t <= 0.0) continue;
    if ((cloud[i] - o - t * d).squaredNorm() > radius * radius) continue;
    if (t < best_t) {
      best_t = t;
      best = static_cast<int>(i);
    }
  }
  return best;
}

double brute_beam_gap(const std::vector<Vec3>& samples, const std::vector<Vec3>& normals, const std::vector<Vec3>& cloud,
                      double eps, std::size_t k, BeamDirection dir) {
  double total = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    bool good = false;
    for (const Neighbor& t : brute_force_knn(cloud, samples[i], k)) {
      for (const Neighbor& s : brute_force_knn(samples, cloud[t.index], k)) good = good || s.index == static_cast<int>(i);
    }
    if (good) continue;
    double best = std::numeric_limits<double>::infinity();
    if (dir != BeamDirection::Backward) {
      if (auto h = brute_beam(cloud, samples[i], normals[i], eps)) best = std::min(best, squared_distance(samples[i], cloud[*h]));
    }
    if (dir != BeamDirection::Forward) {
      if (auto h = brute_beam(cloud, samples[i], -normals[i], eps)) best = std::min(best, squared_distance(samples[i], cloud[*h]));
    }
    if (std::isfinite(best)) total += best;
  }
  return total;
}

Mesh triangle_fan(const std::vector<double>& scales) {
  std::vector<Vec3> v;
  std::vector<Face> f;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const double x = 3.0 * static_cast<double>(i);
    const int b = static_cast<int>(v.size());
    v.push_back(Vec3(x, 0, 0));
    v.push_back(Vec3(x + scales[i], 0, 0));
    v.push_back(Vec3(x, 1, 0));
    f.push_back({b, b + 1, b + 2});
  }
  return Mesh(std::move(v), std::move(f));
}

}  // namespace

TEST(Sampler, SingleTriangleCentroid) {
  const std::vector<Vec3> v{Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 1, 1)};
  const std::vector<Face> f{{0, 1, 2}};
  Rng rng(1);
  Tape<double> tape;
  const auto s = sample_surface(tape.constant(to_tensor(v)), f, 100000, rng);
  const std::vector<Vec3> pts = s.points();
  Vec3 mean = Vec3::Zero();
  for (const Vec3& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Vec3 var = Vec3::Zero();
  for (const Vec3& p : pts) var += (p - mean).cwiseAbs2();
  var /= static_cast<double>(pts.size() - 1);
  const Vec3 centroid = (v[0] + v[1] + v[2]) / 3.0;
  for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(mean[k] - centroid[k]), 3.0 * std::sqrt(var[k] / pts.size()));
  for (const auto& [a1, a2] : s.draws.bary) {
    ASSERT_GE(a1, 0.0);
    ASSERT_GE(a2, 0.0);
    ASSERT_LT(a1 + a2, 1.0 + 1e-15);
  }
}

TEST(Sampler, AreaRatioOneToThree) {
  const Mesh m = triangle_fan({1.0, 3.0});
  Rng rng(2);
  const auto d = draw_samples(m, 100000, rng);
  std::vector<double> counts(2, 0.0);
  for (int f : d.face) counts[f] += 1.0;
  const std::vector<double> expected{25000.0, 75000.0};
  EXPECT_GT(stats::chi_square_p(counts, expected), 1e-3);
}

TEST(Sampler, TenTrianglesFaceLawAndUniformity) {
  const Mesh m = triangle_fan({0.5, 1.0, 1.5, 2.0, 0.25, 0.75, 1.25, 1.75, 2.5, 0.1});
  Rng rng(3);
  const auto d = draw_samples(m, 100000, rng);
  std::vector<double> counts(10, 0.0), expected(10, 0.0);
  double total = 0.0;
  for (std::size_t f = 0; f < 10; ++f) total += m.face_area(f);
  for (std::size_t f = 0; f < 10; ++f) expected[f] = 100000.0 * m.face_area(f) / total;
  for (int f : d.face) counts[f] += 1.0;
  EXPECT_GT(stats::chi_square_p(counts, expected), 1e-3);
  EXPECT_GT(stats::ks2d_triangle_p(d.bary), 1e-3);
}

TEST(Sampler, KsDetectsNonUniformDraws) {
  Rng rng(4);
  std::vector<std::array<double, 2>> skewed(20000);
  for (auto& p : skewed) {
    double a1 = rng.uniform(), a2 = rng.uniform();
    if (a1 + a2 >= 1.0) {
      const double s = a1 + a2;  // folding onto the diagonal instead of reflecting
      a1 /= s;
      a2 /= s;
      a1 *= 0.999;
      a2 *= 0.999;
    }
    p = {a1, a2};
  }
  EXPECT_LT(stats::ks2d_triangle_p(skewed), 1e-3);
}

TEST(Sampler, ZeroAreaRejected) {
  const std::vector<Vec3> v{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  const std::vector<Face> f{{0, 1, 2}};
  Rng rng(5);
  EXPECT_THROW(draw_samples(v, f, 10, rng), MeshError);
}

TEST(Sampler, SameSeedSameDraws) {
  const Mesh m = shapes::icosphere(2);
  Rng a(9), b(9);
  const auto da = draw_samples(m, 500, a);
  const auto db = draw_samples(m, 500, b);
  EXPECT_EQ(da.face, db.face);
  EXPECT_EQ(da.bary, db.bary);
}

TEST(Sampler, NormalsAreUnitAndOutward) {
  const Mesh m = shapes::icosphere(2);
  Rng rng(6);
  Tape<double> tape;
  const auto s = sample_surface(tape.constant(to_tensor(m.vertices())), m.faces(), 2000, rng);
  const std::vector<Vec3> pts = s.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 n(s.normals.value().at(i, 0), s.normals.value().at(i, 1), s.normals.value().at(i, 2));
    EXPECT_NEAR(n.norm(), 1.0, 1e-12);
    EXPECT_GT(n.dot(pts[i]), 0.0);
  }
}

TEST(Sampler, MeanPositionGradientIsMeanBarycentricWeight) {
  const Mesh m = shapes::tetrahedron();
  Rng rng(7);
  const auto draws = draw_samples(m, 400, rng);
  Tape<double> tape;
  Var<double> v = tape.variable(to_tensor(m.vertices()));
  const auto s = sample_at(v, m.faces(), draws);
  tape.backward(ad::mean(s.positions));
  // d(mean of all 3S coordinates)/d v_jk = (sum of v_j's barycentric weights) / (3S).
  std::vector<double> weight(m.vertex_count(), 0.0);
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const Face& f = m.faces()[draws.face[i]];
    const auto [a1, a2] = draws.bary[i];
    weight[f[0]] += 1.0 - a1 - a2;
    weight[f[1]] += a1;
    weight[f[2]] += a2;
  }
  const Tensor<double>& g = tape.gradient(v);
  for (std::size_t j = 0; j < m.vertex_count(); ++j)
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(g.at(j, k), weight[j] / (3.0 * draws.size()), 1e-14);

  const auto res = gradcheck::check(
      [&](Tape<double>&, const std::vector<Var<double>>& in) { return ad::mean(sample_at(in[0], m.faces(), draws).positions); },
      {to_tensor(m.vertices())});
  EXPECT_LT(res.max_rel_error, 1e-6) << res.worst;
}

TEST(Sampler, PositionAndNormalGradientCheck) {
  const Mesh m = shapes::icosphere(1);
  Rng rng(8);
  const auto draws = draw_samples(m, 300, rng);
  const Tensor<double> probe_p = randn({300, 3}, rng), probe_n = randn({300, 3}, rng);
  const auto res = gradcheck::check(
      [&](Tape<double>& t, const std::vector<Var<double>>& in) {
        const auto s = sample_at(in[0], m.faces(), draws);
        return ad::add(ad::sum(ad::mul(s.positions, t.constant(probe_p))), ad::sum(ad::mul(s.normals, t.constant(probe_n))));
      },
      {to_tensor(m.vertices())}, 126);
  EXPECT_GE(res.coordinates, 100u);
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst;
}

TEST(Chamfer, IdenticalSetsGiveZero) {
  Rng rng(10);
  const auto pts = random_points(40, rng);
  Tape<double> tape;
  const auto r = chamfer(PointIndex(pts), batch(tape, pts, pts));
  EXPECT_EQ(r.value.value().item(), 0.0);
}

TEST(Chamfer, SinglePairIsTwo) {
  Tape<double> tape;
  const auto r = chamfer(PointIndex({Vec3(0, 0, 0)}), batch(tape, {Vec3(1, 0, 0)}, {Vec3(0, 0, 1)}));
  EXPECT_DOUBLE_EQ(r.value.value().item(), 2.0);
}

TEST(Chamfer, MatchesBruteForce) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_points(50, rng);
    const auto y = random_points(80, rng);
    for (bool squared : {false, true}) {
      Tape<double> tape;
      const auto r = chamfer(PointIndex(x), batch(tape, y, y), squared);
      const double expect = brute_chamfer(x, y, squared);
      EXPECT_LE(std::abs(r.value.value().item() - expect), 1e-10 * expect);
      for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(r.sample_to_cloud[i], brute_force_nearest(x, y[i]).index);
      for (std::size_t j = 0; j < x.size(); ++j) EXPECT_EQ(r.cloud_to_sample[j], brute_force_nearest(y, x[j]).index);
    }
  }
}

TEST(Chamfer, GradientIsSumOfUnitVectors) {
  Rng rng(12);
  const auto x = random_points(30, rng);
  const auto y = random_points(45, rng);
  Tape<double> tape;
  const auto b = batch(tape, y, y);
  const auto r = chamfer(PointIndex(x), b);
  tape.backward(r.value);
  const Tensor<double>& g = tape.gradient(b.positions);
  for (std::size_t i = 0; i < y.size(); ++i) {
    Vec3 expect = (y[i] - x[r.sample_to_cloud[i]]).normalized();
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (r.cloud_to_sample[j] == static_cast<int>(i)) expect += (y[i] - x[j]).normalized();
    }
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(g.at(i, k), expect[k], 1e-12);
  }
  const auto res = gradcheck::check(
      [&](Tape<double>&, const std::vector<Var<double>>& in) {
        SampleBatch<double> s{in[0], in[0], {}};
        s.draws.face.assign(y.size(), 0);
        s.draws.bary.assign(y.size(), {0.0, 0.0});
        return chamfer(PointIndex(x), s).value;
      },
      {to_tensor(y)});
  EXPECT_GE(res.coordinates, 100u);
  EXPECT_LT(res.max_rel_error, 1e-5) << res.worst;
}

TEST(Chamfer, GradientThroughSamplerCheck) {
  const Mesh m = shapes::icosphere(1);
  Rng rng(13);
  const auto draws = draw_samples(m, 200, rng);
  const auto cloud = random_points(150, rng, 0.8);
  const PointIndex index(cloud);
  const auto res = gradcheck::check(
      [&](Tape<double>&, const std::vector<Var<double>>& in) { return chamfer(index, sample_at(in[0], m.faces(), draws)).value; },
      {to_tensor(m.vertices())}, 126, 1e-6);
  EXPECT_GE(res.coordinates, 100u);
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst;
}

TEST(BeamGap, AllGoodFitIsZero) {
  Rng rng(14);
  const auto pts = random_points(60, rng);
  Tape<double> tape;
  const auto b = batch(tape, pts, random_points(60, rng));
  EXPECT_EQ(beam_gap(b, PointIndex(pts), 0.5, 3).value().item(), 0.0);
}

TEST(BeamGap, SingleCollisionIsSquaredDistance) {
  // The first sample is not a good fit: the cloud point's nearest sample is the second one.
  Tape<double> tape;
  const auto b = batch(tape, {Vec3(0, 0, 0), Vec3(0, 0, 1.9)}, {Vec3(0, 0, 1), Vec3(1, 0, 0)});
  const PointIndex cloud({Vec3(0, 0, 2)});
  EXPECT_DOUBLE_EQ(beam_gap(b, cloud, 0.1, 1, BeamDirection::Forward).value().item(), 4.0);
  EXPECT_DOUBLE_EQ(beam_gap(b, cloud, 0.1, 1, BeamDirection::Both).value().item(), 4.0);
  EXPECT_EQ(beam_gap(b, cloud, 0.1, 1, BeamDirection::Backward).value().item(), 0.0);
}

TEST(BeamGap, MissIsZero) {
  Tape<double> tape;
  const auto b = batch(tape, {Vec3(0, 0, 0), Vec3(0, 0, 1.9)}, {Vec3(1, 0, 0), Vec3(1, 0, 0)});
  EXPECT_EQ(beam_gap(b, PointIndex({Vec3(0, 0, 2)}), 0.1, 1).value().item(), 0.0);
}

TEST(BeamGap, MatchesBruteForce) {
  Rng rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const auto cloud = random_points(120, rng);
    const auto y = random_points(90, rng);
    std::vector<Vec3> n = random_points(90, rng);
    for (Vec3& v : n) v.normalize();
    for (BeamDirection dir : {BeamDirection::Forward, BeamDirection::Backward, BeamDirection::Both}) {
      Tape<double> tape;
      const double got = beam_gap(batch(tape, y, n), PointIndex(cloud), 0.2, 3, dir).value().item();
      const double expect = brute_beam_gap(y, n, cloud, 0.2, 3, dir);
      EXPECT_GE(got, 0.0);
      EXPECT_LE(std::abs(got - expect), 1e-10 * std::max(1.0, expect));
    }
  }
}

TEST(BeamGap, GradientCheck) {
  const Mesh m = shapes::icosphere(1);
  Rng rng(16);
  const auto draws = draw_samples(m, 200, rng);
  std::vector<Vec3> cloud = random_points(300, rng, 1.6);
  const PointIndex index(cloud);
  Tape<double> probe_tape;
  const double value =
      beam_gap(sample_at(probe_tape.constant(to_tensor(m.vertices())), m.faces(), draws), index, 0.3, 3).value().item();
  ASSERT_GT(value, 0.0);
  const auto res = gradcheck::check(
      [&](Tape<double>&, const std::vector<Var<double>>& in) { return beam_gap(sample_at(in[0], m.faces(), draws), index, 0.3, 3); },
      {to_tensor(m.vertices())}, 126, 1e-7);
  EXPECT_GE(res.coordinates, 100u);
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst;
}

TEST(NormalPenalty, ParallelOrthogonalAntiParallel) {
  Tape<double> tape;
  const auto b = batch(tape, {Vec3(0, 0, 0)}, {Vec3(0, 0, 1)});
  const std::vector<int> pair{0};
  const std::vector<Vec3> up{Vec3(0, 0, 2)}, down{Vec3(0, 0, -1)}, side{Vec3(1, 0, 0)};
  EXPECT_NEAR(normal_penalty<double>(up, b, pair)->value().item(), 0.0, 1e-15);
  EXPECT_NEAR(normal_penalty<double>(down, b, pair)->value().item(), 0.0, 1e-15);
  EXPECT_NEAR(normal_penalty<double>(down, b, pair, true)->value().item(), 2.0, 1e-15);
  EXPECT_NEAR(normal_penalty<double>(side, b, pair)->value().item(), 1.0, 1e-15);
}

TEST(NormalPenalty, MissingNormalsSkipped) {
  Tape<double> tape;
  const auto b = batch(tape, {Vec3(0, 0, 0)}, {Vec3(0, 0, 1)});
  EXPECT_FALSE(normal_penalty<double>({}, b, std::vector<int>{0}).has_value());
}

TEST(NormalPenalty, GradientCheck) {
  const Mesh m = shapes::icosphere(1);
  Rng rng(17);
  const auto draws = draw_samples(m, 200, rng);
  std::vector<Vec3> normals = random_points(120, rng);
  std::vector<int> pairing(120);
  for (int& p : pairing) p = static_cast<int>(rng.below(200));
  for (bool oriented : {false, true}) {
    const auto res = gradcheck::check(
        [&](Tape<double>&, const std::vector<Var<double>>& in) {
          return *normal_penalty<double>(normals, sample_at(in[0], m.faces(), draws), pairing, oriented);
        },
        {to_tensor(m.vertices())}, 126);
    EXPECT_GE(res.coordinates, 100u);
    EXPECT_LT(res.max_rel_error, 1e-4) << res.worst;
  }
}

TEST(TotalLoss, WeightsAndCadence) {
  Tape<double> tape;
  LossTerms<double> terms{tape.constant(Tensor<double>::scalar(2.0)), tape.constant(Tensor<double>::scalar(3.0)),
                          tape.constant(Tensor<double>::scalar(5.0))};
  LossWeights only_chamfer{.chamfer = 1.0, .beam = 0.0, .normal = 0.0};
  EXPECT_EQ(total_loss(terms, only_chamfer, 0, 3).value().item(), 2.0);

  LossWeights w{.chamfer = 1.5, .beam = 0.25, .normal = 0.1, .beam_cadence = 5, .beam_first_level = 1};
  EXPECT_DOUBLE_EQ(total_loss(terms, w, 3, 1).value().item(), 1.5 * 2.0 + 0.1 * 5.0);
  EXPECT_DOUBLE_EQ(total_loss(terms, w, 10, 1).value().item(), 1.5 * 2.0 + 0.25 * 3.0 + 0.1 * 5.0);
  EXPECT_DOUBLE_EQ(total_loss(terms, w, 10, 0).value().item(), 1.5 * 2.0 + 0.1 * 5.0);
  EXPECT_FALSE(w.beam_active(3, 1));
  EXPECT_TRUE(w.beam_active(0, 1));
  EXPECT_THROW((LossWeights{.chamfer = -1.0}.validate()), NumericError);
}

TEST(Losses, TranslationInvariance) {
  const Mesh m = shapes::icosphere(2);
  Rng rng(18);
  const auto draws = draw_samples(m, 400, rng);
  const auto cloud = random_points(300, rng, 1.2);
  std::vector<Vec3> normals = random_points(300, rng);
  const Vec3 shift(3.25, -1.5, 0.75);
  auto evaluate = [&](const Vec3& t) {
    std::vector<Vec3> v = m.vertices(), c = cloud;
    for (Vec3& p : v) p += t;
    for (Vec3& p : c) p += t;
    Tape<double> tape;
    const PointIndex index(c);
    const auto s = sample_at(tape.constant(to_tensor(v)), m.faces(), draws);
    const auto ch = chamfer(index, s);
    return std::array<double, 3>{ch.value.value().item(), beam_gap(s, index, 0.2, 3).value().item(),
                                 normal_penalty<double>(normals, s, ch.cloud_to_sample)->value().item()};
  };
  const auto a = evaluate(Vec3::Zero());
  const auto b = evaluate(shift);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(a[k], b[k], 1e-10 * std::max(1.0, std::abs(a[k])));
}
