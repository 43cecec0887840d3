#include "p2m/metrics.hpp"

#include "p2m/geometry.hpp"

#include <algorithm>
#include <numeric>

namespace p2m {

namespace {

double box_distance2(const BoundingBox& b, const Vec3& p) {
  const Vec3 d = (b.min - p).cwiseMax(p - b.max).cwiseMax(0.0);
  return d.squaredNorm();
}

}  // namespace

SurfaceIndex::SurfaceIndex(const Mesh& mesh) {
  if (mesh.empty()) throw MeshError("SurfaceIndex: mesh has no faces");
  tris_.reserve(mesh.face_count());
  for (const Face& f : mesh.faces()) tris_.push_back({mesh.vertices()[f[0]], mesh.vertices()[f[1]], mesh.vertices()[f[2]]});
  order_.resize(tris_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * tris_.size());
  build(0, static_cast<int>(tris_.size()));
}

int SurfaceIndex::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  BoundingBox box;
  BoundingBox centers;
  for (int i = begin; i < end; ++i) {
    for (const Vec3& v : tris_[order_[i]]) box.extend(v);
    centers.extend((tris_[order_[i]][0] + tris_[order_[i]][1] + tris_[order_[i]][2]) / 3.0);
  }
  nodes_[id].box = box;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= 4) return id;
  int axis = 0;
  centers.extent().maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
    const double ca = tris_[a][0][axis] + tris_[a][1][axis] + tris_[a][2][axis];
    const double cb = tris_[b][0][axis] + tris_[b][1][axis] + tris_[b][2][axis];
    return ca < cb || (ca == cb && a < b);
  });
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void SurfaceIndex::query(int node, const Vec3& p, Hit& best) const {
  const Node& n = nodes_[node];
  if (n.left < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int f = order_[i];
      const Vec3 q = closest_point_on_triangle(p, tris_[f][0], tris_[f][1], tris_[f][2]);
      const double d = (p - q).norm();
      if (d < best.distance || (d == best.distance && f < best.face)) best = {f, d, q};
    }
    return;
  }
  const double dl = box_distance2(nodes_[n.left].box, p);
  const double dr = box_distance2(nodes_[n.right].box, p);
  const int first = dl <= dr ? n.left : n.right;
  const int second = dl <= dr ? n.right : n.left;
  const double d2_first = std::min(dl, dr), d2_second = std::max(dl, dr);
  if (d2_first <= best.distance * best.distance) query(first, p, best);
  if (d2_second <= best.distance * best.distance) query(second, p, best);
}

SurfaceIndex::Hit SurfaceIndex::closest(const Vec3& p) const {
  Hit best;
  query(0, p, best);
  return best;
}

std::vector<Vec3> sample_points(const Mesh& mesh, std::size_t count, Rng& rng, std::span<const int> faces) {
  std::vector<int> pick(faces.begin(), faces.end());
  if (pick.empty()) {
    pick.resize(mesh.face_count());
    std::iota(pick.begin(), pick.end(), 0);
  }
  std::vector<double> cdf(pick.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pick.size(); ++i) {
    if (pick[i] < 0 || static_cast<std::size_t>(pick[i]) >= mesh.face_count()) {
      throw MeshError("sample_points: face " + std::to_string(pick[i]) + " out of range");
    }
    total += mesh.face_area(pick[i]);
    cdf[i] = total;
  }
  if (!(total > 0.0)) throw MeshError("sample_points: zero surface area");
  std::vector<Vec3> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), rng.uniform() * total);
    if (it == cdf.end()) it = std::lower_bound(cdf.begin(), cdf.end(), total);
    const Face& f = mesh.faces()[pick[it - cdf.begin()]];
    double a1 = rng.uniform(), a2 = rng.uniform();
    if (a1 + a2 >= 1.0) {
      a1 = 1.0 - a1;
      a2 = 1.0 - a2;
    }
    const Vec3& v0 = mesh.vertices()[f[0]];
    out.push_back(v0 + a1 * (mesh.vertices()[f[1]] - v0) + a2 * (mesh.vertices()[f[2]] - v0));
  }
  return out;
}

double harmonic_mean(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

namespace {

double within_percent(const std::vector<Vec3>& pts, const SurfaceIndex& surface, double tau) {
  std::size_t hits = 0;
  for (const Vec3& p : pts) hits += surface.distance(p) <= tau ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(pts.size());
}

FScoreReport evaluate(const Mesh& recon, const Mesh& truth, std::span<const int> recall_faces, double tau,
                      std::size_t samples, std::uint64_t seed) {
  if (!(tau > 0.0)) throw NumericError("f_score: tau must be positive");
  if (samples < 10000) throw NumericError("f_score: need at least 10000 samples, got " + std::to_string(samples));
  if (!(recon.surface_area() > 0.0) || !(truth.surface_area() > 0.0)) throw MeshError("f_score: zero-area mesh");
  Rng rng(seed);
  Rng precision_rng = rng.fork(1);
  Rng recall_rng = rng.fork(2);
  FScoreReport r;
  r.tau = tau;
  r.tau_distance = tau * truth.bounds().diagonal();
  const std::vector<Vec3> from_recon = sample_points(recon, samples, precision_rng);
  const std::vector<Vec3> from_truth = sample_points(truth, samples, recall_rng, recall_faces);
  r.precision = within_percent(from_recon, SurfaceIndex(truth), r.tau_distance);
  r.recall = within_percent(from_truth, SurfaceIndex(recon), r.tau_distance);
  r.f_score = harmonic_mean(r.precision, r.recall);
  r.precision_samples = from_recon.size();
  r.recall_samples = from_truth.size();
  return r;
}

}  // namespace

FScoreReport f_score(const Mesh& recon, const Mesh& truth, double tau, std::size_t samples, std::uint64_t seed) {
  return evaluate(recon, truth, {}, tau, samples, seed);
}

FScoreReport f_score_completion(const Mesh& recon, const Mesh& truth, std::span<const int> missing_faces, double tau,
                                std::size_t samples, std::uint64_t seed) {
  if (missing_faces.empty()) throw MeshError("f_score_completion: empty missing region");
  return evaluate(recon, truth, missing_faces, tau, samples, seed);
}

std::vector<int> faces_within(const Mesh& mesh, const Vec3& center, double radius) {
  std::vector<int> out;
  const auto& v = mesh.vertices();
  for (std::size_t f = 0; f < mesh.face_count(); ++f) {
    const Face& t = mesh.faces()[f];
    const Vec3 c = (v[t[0]] + v[t[1]] + v[t[2]]) / 3.0;
    if ((c - center).norm() <= radius) out.push_back(static_cast<int>(f));
  }
  return out;
}

}  // namespace p2m
