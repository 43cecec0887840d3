#include "p2m/nn/prior_net.hpp"
#include "p2m/shapes.hpp"

#include "gradcheck.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <set>

using namespace p2m;
using namespace p2m::nn;
using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

Tensor<double> randn(ad::Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.normal();
  return t;
}

Var<double> probe(Tape<double>& tape, Var<double> x) {
  Rng rng(7);
  return ad::sum(ad::mul(x, tape.constant(randn(x.shape(), rng))));
}

}  // namespace

TEST(EdgeConv, ZeroFeaturesGiveBias) {
  Rng rng(1);
  Mesh m = shapes::icosahedron();
  EdgeConv<double> conv("c", 4, 3, rng);
  for (int k = 0; k < 3; ++k) conv.bias.value()[k] = k + 0.5;
  Tape<double> tape;
  Var<double> out = conv(tape, tape.constant(Tensor<double>({30, 4})), share_neighbors(m));
  for (std::size_t e = 0; e < 30; ++e)
    for (int k = 0; k < 3; ++k) EXPECT_EQ(out.value().at(e, k), k + 0.5);
  conv.bias.value().fill(0.0);
  Tape<double> t2;
  EXPECT_EQ(conv(t2, t2.constant(Tensor<double>({30, 4})), share_neighbors(m)).value(), Tensor<double>({30, 3}));
}

TEST(EdgeConv, NeighborPairSwapIsBitIdentical) {
  Rng rng(2);
  Mesh m = shapes::icosphere(2);
  EdgeConv<float> conv("c", 8, 16, rng);
  const Tensor<float> x = ad::uniform_tensor<float>({m.edge_count(), 8}, rng);
  auto swapped = std::make_shared<std::vector<std::array<int, 4>>>(m.edge_neighbors());
  for (auto& n : *swapped) {
    std::swap(n[0], n[2]);
    std::swap(n[1], n[3]);
  }
  Tape<float> tape;
  const auto a = conv(tape, tape.constant(x), share_neighbors(m)).value();
  const auto b = conv(tape, tape.constant(x), swapped).value();
  EXPECT_EQ(a, b);
}

TEST(EdgeConv, HandComputedStencil) {
  // Five edges with scalar features; edge 0 has neighbors (1, 2, 3, 4).
  auto nb = std::make_shared<const std::vector<std::array<int, 4>>>(
      std::vector<std::array<int, 4>>{{1, 2, 3, 4}, {0, 2, 3, 4}, {0, 1, 3, 4}, {0, 1, 2, 4}, {0, 1, 2, 3}});
  Tape<double> tape;
  Var<double> x = tape.constant(Tensor<double>({5, 1}, {1.0, 2.0, 7.0, 5.0, 3.0}));
  const auto s = edge_stencil(x, nb).value();
  // [x_e, |a-c|, a+c, |b-d|, b+d] with a=2, b=7, c=5, d=3.
  EXPECT_EQ(s.at(0, 0), 1.0);
  EXPECT_EQ(s.at(0, 1), 3.0);
  EXPECT_EQ(s.at(0, 2), 7.0);
  EXPECT_EQ(s.at(0, 3), 4.0);
  EXPECT_EQ(s.at(0, 4), 10.0);

  Rng rng(0);
  EdgeConv<double> conv("c", 1, 1, rng);
  for (int k = 0; k < 5; ++k) conv.weight.value()[k] = k + 1.0;
  conv.bias.value()[0] = 0.25;
  const double expect = 1 * 1.0 + 2 * 3.0 + 3 * 7.0 + 4 * 4.0 + 5 * 10.0 + 0.25;
  EXPECT_EQ(conv(tape, x, nb).value().at(0, 0), expect);
}

TEST(EdgeConv, ChannelMismatch) {
  Rng rng(0);
  Mesh m = shapes::tetrahedron();
  EdgeConv<double> conv("layer", 4, 2, rng);
  Tape<double> tape;
  EXPECT_THROW(conv(tape, tape.constant(Tensor<double>({6, 3})), share_neighbors(m)), NumericError);
}

TEST(EdgeConv, GradientCheck) {
  Rng rng(3);
  Mesh m = shapes::icosphere(1);
  auto nb = share_neighbors(m);
  const auto res = gradcheck::check(
      [nb](Tape<double>& t, const std::vector<Var<double>>& in) {
        return probe(t, ad::add_bias(ad::matmul(edge_stencil(in[0], nb), in[1]), in[2]));
      },
      {randn({m.edge_count(), 3}, rng), randn({15, 4}, rng), randn({4}, rng)}, 150);
  EXPECT_GE(res.coordinates, 100u);
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst;
}

TEST(EdgeConv, ConvBlockGradientCheck) {
  Rng rng(4);
  Mesh m = shapes::icosphere(1);
  ConvBlock<double> block("b", 3, 4, 2, rng);
  auto nb = share_neighbors(m);
  const auto res = gradcheck::check(
      [&](Tape<double>& t, const std::vector<Var<double>>& in) { return probe(t, block(t, in[0], nb)); },
      {randn({m.edge_count(), 3}, rng)}, 120);
  EXPECT_GE(res.coordinates, 100u);
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst;
}

TEST(Pool, TargetEqualToCountIsIdentity) {
  Mesh m = shapes::icosahedron();
  std::vector<double> pr(30, 1.0);
  const PoolRecord rec = pool_edges(m, pr, 30);
  EXPECT_TRUE(rec.identity());
  for (int e = 0; e < 30; ++e) EXPECT_EQ((*rec.parent)[e], e);
}

TEST(Pool, IcosahedronTo24Edges) {
  Mesh m = shapes::icosahedron();
  Rng rng(5);
  std::vector<double> pr(30);
  for (double& p : pr) p = rng.uniform();
  const PoolRecord rec = pool_edges(m, pr, 24);
  EXPECT_EQ(rec.new_count, 24u);
  EXPECT_EQ(rec.coarse.edge_count(), 24u);
  EXPECT_EQ(rec.coarse.euler_characteristic(), 2);
  EXPECT_TRUE(is_watertight(rec.coarse));
  // Every coarse edge receives at least one fine edge.
  std::set<int> hit(rec.parent->begin(), rec.parent->end());
  EXPECT_EQ(hit.size(), 24u);
}

TEST(Pool, LowestPriorityCollapsesFirst) {
  Mesh m = shapes::icosahedron();
  std::vector<double> pr(30, 1.0);
  pr[17] = 0.0;
  const PoolRecord rec = pool_edges(m, pr, 27);
  EXPECT_EQ(rec.new_count, 27u);
  // Edge 17 merged with the two edges of its lower face.
  const int f = m.edge_faces()[17][0];
  for (int e : m.topology().face_edges[f]) EXPECT_EQ((*rec.parent)[e], (*rec.parent)[17]);
}

TEST(Pool, StopsEarlyWhenUnreachable) {
  Mesh m = shapes::icosahedron();
  std::vector<double> pr(30, 0.0);
  const PoolRecord rec = pool_edges(m, pr, 3);
  EXPECT_GT(rec.new_count, 3u);
  EXPECT_GE(rec.new_count, 6u);  // never below a tetrahedron
  EXPECT_TRUE(is_watertight(rec.coarse));
  EXPECT_EQ(rec.coarse.euler_characteristic(), 2);
}

TEST(Pool, PreservesGenusOnTorus) {
  Mesh m = shapes::torus(1.0, 0.4, 16, 8);
  Rng rng(6);
  std::vector<double> pr(m.edge_count());
  for (double& p : pr) p = rng.uniform();
  const PoolRecord rec = pool_edges(m, pr, m.edge_count() / 2);
  EXPECT_TRUE(is_watertight(rec.coarse));
  EXPECT_EQ(genus(rec.coarse), 1);
}

TEST(Pool, RoundTripRestoresShape) {
  Mesh m = shapes::icosphere(2);
  Rng rng(7);
  Tape<double> tape;
  Var<double> x = tape.variable(randn({m.edge_count(), 5}, rng));
  auto [pooled, rec] = pool(x, m, m.edge_count() * 4 / 5);
  EXPECT_LT(pooled.rows(), m.edge_count());
  Var<double> back = unpool_features(pooled, rec);
  EXPECT_EQ(back.rows(), m.edge_count());
  EXPECT_THROW(unpool_features(x, rec), NumericError);
  Var<double> zeros = tape.constant(Tensor<double>({m.edge_count(), 2}));
  auto [pz, rz] = pool(zeros, m, m.edge_count() * 4 / 5);
  EXPECT_EQ(unpool_features(pz, rz).value(), Tensor<double>({m.edge_count(), 2}));
}

TEST(Pool, PoolingGradient) {
  Mesh m = shapes::icosphere(1);
  Rng rng(8);
  const Tensor<double> x0 = randn({m.edge_count(), 4}, rng);
  std::vector<double> pr(m.edge_count());
  for (double& p : pr) p = rng.uniform();
  const PoolRecord rec = pool_edges(m, pr, 90);
  const auto res = gradcheck::check(
      [&](Tape<double>& t, const std::vector<Var<double>>& in) { return probe(t, unpool_features(pool_features(in[0], rec), rec)); },
      {x0}, 120);
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst;
}

TEST(PriorNet, FreshWeightsGiveZeroOutput) {
  Mesh m = shapes::icosphere(3);
  PriorNet<float> net(PriorNetConfig{.seed = 3});
  Rng rng(9);
  EdgeCode<float> code(m.edge_count(), rng);
  Tape<float> tape;
  const auto out = net.forward(tape, code.values, m).value();
  EXPECT_EQ(out.shape(), (ad::Shape{m.edge_count(), 6}));
  for (std::size_t i = 0; i < out.size(); ++i) ASSERT_EQ(out[i], 0.0f);
  Var<float> dv = build_delta_v(tape.constant(out), m);
  EXPECT_EQ(apply_displacements(m, dv.value()).vertices(), m.vertices());
}

TEST(PriorNet, DeterministicAndSensitive) {
  Mesh m = shapes::icosphere(2);
  PriorNetConfig cfg{.channels = {32, 32, 64}, .seed = 4};
  PriorNet<float> a(cfg), b(cfg);
  Rng rng(10);
  EdgeCode<float> code(m.edge_count(), rng);
  // Make the head non-trivial so the whole network contributes.
  auto pa = a.parameters(), pb = b.parameters();
  Rng head_rng(1);
  // The head bias is the last parameter and its weight the one before.
  Parameter<float>* wa = pa[pa.size() - 2];
  Parameter<float>* wb = pb[pb.size() - 2];
  for (std::size_t i = 0; i < wa->value().size(); ++i) wa->value()[i] = wb->value()[i] = static_cast<float>(0.01 * head_rng.normal());
  Tape<float> t1, t2;
  const auto oa = a.forward(t1, code.values, m).value();
  const auto ob = b.forward(t2, code.values, m).value();
  EXPECT_EQ(oa, ob);
  pb[0]->value()[0] += 0.5f;
  Tape<float> t3;
  EXPECT_NE(b.forward(t3, code.values, m).value(), oa);
}

TEST(PriorNet, ParameterCountAndNames) {
  PriorNet<float> net(PriorNetConfig{});
  std::set<std::string> names;
  for (auto* p : net.parameters()) EXPECT_TRUE(names.insert(p->name()).second) << p->name();
  EXPECT_GT(net.parameter_count(), 100000u);
  EXPECT_LT(net.parameter_count(), 1000000u);
}

TEST(PriorNet, GradientsReachFirstLayer) {
  Mesh m = shapes::icosphere(2);
  PriorNet<double> net(PriorNetConfig{.channels = {32, 32, 64}, .seed = 5});
  Rng rng(11);
  EdgeCode<double> code(m.edge_count(), rng);
  Tape<double> tape;
  Var<double> out = net.forward(tape, code.values, m);
  tape.backward(probe(tape, out));
  auto params = net.parameters();
  double head_grad = 0.0, first_grad = 0.0;
  for (double g : params[params.size() - 2]->grad().values()) head_grad += std::abs(g);
  for (double g : params[0]->grad().values()) first_grad += std::abs(g);
  EXPECT_GT(head_grad, 0.0);
  EXPECT_EQ(first_grad, 0.0);  // a zero head blocks the signal on the very first step
}

TEST(DeltaV, TwoSlotMean) {
  // Path 0-1-2 closed into a triangle: vertex 1 belongs to edges (0,1) and (1,2).
  Mesh m({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
  Tensor<double> de({3, 6});
  // Edge order: (0,1), (0,2), (1,2). Vertex 1 is the hi slot of edge 0 and the lo slot of edge 2.
  de.at(0, 3) = 0.0;
  de.at(2, 0) = 2.0;
  Tape<double> tape;
  const auto dv = build_delta_v(tape.constant(de), m).value();
  EXPECT_EQ(dv.at(1, 0), 1.0);
  EXPECT_EQ(dv.at(1, 1), 0.0);
  Tape<double> t2;
  EXPECT_EQ(build_delta_v(t2.constant(Tensor<double>({3, 6})), m).value(), Tensor<double>({3, 3}));
}

TEST(DeltaV, MatchesBruteForceAveraging) {
  Mesh m = shapes::tetrahedron();
  Rng rng(12);
  const Tensor<double> de = randn({6, 6}, rng);
  Tape<double> tape;
  const auto dv = build_delta_v(tape.constant(de), m).value();
  for (int v = 0; v < 4; ++v) {
    Vec3 sum = Vec3::Zero();
    int n = 0;
    for (std::size_t e = 0; e < 6; ++e)
      for (int side = 0; side < 2; ++side)
        if (m.edges()[e][side] == v) {
          sum += Vec3(de.at(e, 3 * side), de.at(e, 3 * side + 1), de.at(e, 3 * side + 2));
          ++n;
        }
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(dv.at(v, k), sum[k] / n, 1e-12);
  }
}

TEST(DeltaV, GradientCheck) {
  Mesh m = shapes::icosphere(1);
  Rng rng(13);
  const auto res = gradcheck::check(
      [&](Tape<double>& t, const std::vector<Var<double>>& in) { return probe(t, build_delta_v(in[0], m)); },
      {randn({m.edge_count(), 6}, rng)}, 150);
  EXPECT_LT(res.max_rel_error, 1e-6) << res.worst;
}

TEST(DeltaV, IsolatedVertexRejected) {
  Mesh m({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 5, 5}}, {{0, 1, 2}});
  Tape<double> tape;
  EXPECT_THROW(build_delta_v(tape.constant(Tensor<double>({3, 6})), m), MeshError);
}

TEST(ApplyDisplacements, TranslationAndConnectivity) {
  Mesh m = shapes::icosphere(1);
  Tensor<double> dv({m.vertex_count(), 3});
  for (std::size_t v = 0; v < m.vertex_count(); ++v) dv.at(v, 0) = 0.5;
  const Mesh moved = apply_displacements(m, dv);
  for (std::size_t v = 0; v < m.vertex_count(); ++v) EXPECT_EQ(moved.vertices()[v], m.vertices()[v] + Vec3(0.5, 0, 0));
  EXPECT_EQ(moved.faces(), m.faces());
  EXPECT_EQ(moved.edges(), m.edges());
  EXPECT_EQ(apply_displacements(m, Tensor<double>({m.vertex_count(), 3})).vertices(), m.vertices());
}

TEST(PriorNet, ForwardBackwardTiming) {
  // Timing probe on a 1500-face sphere-like mesh; reported, loosely bounded.
  Mesh m = shapes::icosphere(3);
  PriorNet<float> net(PriorNetConfig{.seed = 1});
  Rng rng(14);
  EdgeCode<float> code(m.edge_count(), rng);
  const auto start = std::chrono::steady_clock::now();
  for (int it = 0; it < 5; ++it) {
    Tape<float> tape;
    Var<float> out = net.forward(tape, code.values, m);
    tape.backward(ad::sum(out));
  }
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() / 5;
  std::cout << "edges " << m.edge_count() << " params " << net.parameter_count() << " ms/iter " << ms << "\n";
  EXPECT_LT(ms, 2000.0);
}
