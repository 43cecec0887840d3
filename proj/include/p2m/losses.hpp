#pragma once

#include "p2m/ad/ops.hpp"
#include "p2m/mesh.hpp"
#include "p2m/spatial.hpp"

#include <optional>

namespace p2m::loss {

using ad::Tape;
using ad::Tensor;
using ad::Var;

/// Random choices behind one surface sample set: the face of every sample and its two
/// free barycentric coefficients (a1 on the face's second vertex, a2 on its third).
/// Kept separate from positions so that the same draws can be re-evaluated.
struct SampleDraws {
  std::vector<int> face;
  std::vector<std::array<double, 2>> bary;

  std::size_t size() const { return face.size(); }
};

/// Faces are chosen with probability proportional to area; within a face a1, a2 are
/// uniform on [0, 1) and reflected to (1 - a1, 1 - a2) when a1 + a2 >= 1.
inline SampleDraws draw_samples(std::span<const Vec3> vertices, std::span<const Face> faces, std::size_t count,
                                Rng& rng) {
  std::vector<double> cdf(faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Vec3& a = vertices[faces[f][0]];
    total += 0.5 * (vertices[faces[f][1]] - a).cross(vertices[faces[f][2]] - a).norm();
    cdf[f] = total;
  }
  if (!(total > 0.0)) throw MeshError("sample_surface: mesh has zero total area");
  SampleDraws d;
  d.face.reserve(count);
  d.bary.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) it = std::lower_bound(cdf.begin(), cdf.end(), total);  // u rounded up to total
    d.face.push_back(static_cast<int>(it - cdf.begin()));
    double a1 = rng.uniform();
    double a2 = rng.uniform();
    if (a1 + a2 >= 1.0) {
      a1 = 1.0 - a1;
      a2 = 1.0 - a2;
    }
    d.bary.push_back({a1, a2});
  }
  return d;
}

inline SampleDraws draw_samples(const Mesh& mesh, std::size_t count, Rng& rng) {
  return draw_samples(mesh.vertices(), mesh.faces(), count, rng);
}

/// Differentiable sample set: positions (S, 3) and unit face normals (S, 3), both
/// functions of the vertex tensor they were built from.
template <std::floating_point T>
struct SampleBatch {
  Var<T> positions;
  Var<T> normals;
  SampleDraws draws;

  std::size_t size() const { return draws.size(); }
  std::vector<Vec3> points() const {
    const Tensor<T>& p = positions.value();
    std::vector<Vec3> out(p.rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = Vec3(p.at(i, 0), p.at(i, 1), p.at(i, 2));
    return out;
  }
};

/// Evaluates frozen draws on vertex positions `vertices` (V, 3):
/// p = (1 - a1 - a2) v0 + a1 v1 + a2 v2 and n = normalize((v1 - v0) x (v2 - v0)).
template <std::floating_point T>
SampleBatch<T> sample_at(Var<T> vertices, std::span<const Face> faces, SampleDraws draws) {
  const std::size_t s = draws.size();
  std::array<std::vector<int>, 3> corner;
  Tensor<T> w0({s, 1}), w1({s, 1}), w2({s, 1});
  for (int k = 0; k < 3; ++k) corner[k].resize(s);
  for (std::size_t i = 0; i < s; ++i) {
    const int f = draws.face[i];
    if (f < 0 || static_cast<std::size_t>(f) >= faces.size()) {
      throw NumericError("sample_at: face " + std::to_string(f) + " out of range");
    }
    for (int k = 0; k < 3; ++k) corner[k][i] = faces[f][k];
    const auto [a1, a2] = draws.bary[i];
    w0[i] = static_cast<T>(1.0 - a1 - a2);
    w1[i] = static_cast<T>(a1);
    w2[i] = static_cast<T>(a2);
  }
  Tape<T>& tape = *vertices.tape;
  Var<T> p0 = ad::gather_rows(vertices, std::move(corner[0]));
  Var<T> p1 = ad::gather_rows(vertices, std::move(corner[1]));
  Var<T> p2 = ad::gather_rows(vertices, std::move(corner[2]));
  Var<T> pos = ad::add(ad::add(ad::mul(p0, tape.constant(std::move(w0))), ad::mul(p1, tape.constant(std::move(w1)))),
                       ad::mul(p2, tape.constant(std::move(w2))));
  Var<T> nrm = ad::normalize_rows(ad::cross_rows(ad::sub(p1, p0), ad::sub(p2, p0)));
  return SampleBatch<T>{pos, nrm, std::move(draws)};
}

/// Draws `count` samples on the current vertex positions and evaluates them.
template <std::floating_point T>
SampleBatch<T> sample_surface(Var<T> vertices, std::span<const Face> faces, std::size_t count, Rng& rng) {
  const Tensor<T>& v = vertices.value();
  if (v.rank() != 2 || v.cols() != 3) throw NumericError("sample_surface: vertices must be (V, 3)");
  std::vector<Vec3> pts(v.rows());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = Vec3(v.at(i, 0), v.at(i, 1), v.at(i, 2));
  return sample_at(vertices, faces, draw_samples(pts, faces, count, rng));
}

template <std::floating_point T>
Tensor<T> point_rows(std::span<const Vec3> points) {
  Tensor<T> out({points.size(), 3});
  for (std::size_t i = 0; i < points.size(); ++i)
    for (int k = 0; k < 3; ++k) out.at(i, k) = static_cast<T>(points[i][k]);
  return out;
}

/// Constant (N, 3) tensor of selected cloud points.
template <std::floating_point T>
Tensor<T> point_rows(std::span<const Vec3> points, std::span<const int> pick) {
  Tensor<T> out({pick.size(), 3});
  for (std::size_t i = 0; i < pick.size(); ++i)
    for (int k = 0; k < 3; ++k) out.at(i, k) = static_cast<T>(points[pick[i]][k]);
  return out;
}

template <std::floating_point T>
struct ChamferResult {
  Var<T> value;
  std::vector<int> sample_to_cloud;  // nearest cloud point of every sample
  std::vector<int> cloud_to_sample;  // nearest sample of every cloud point
};

/// Bidirectional Chamfer distance between the fixed cloud and the samples: the sum of
/// nearest-neighbour distances in both directions (squared distances when `squared`).
/// Pairings are found with kd-trees and held constant for differentiation.
template <std::floating_point T>
ChamferResult<T> chamfer(const PointIndex& cloud, const SampleBatch<T>& samples, bool squared = false) {
  if (cloud.empty() || samples.size() == 0) throw NumericError("chamfer: empty point set");
  const std::vector<Vec3> ys = samples.points();
  const PointIndex sample_index(ys);
  ChamferResult<T> r;
  r.sample_to_cloud.resize(ys.size());
  r.cloud_to_sample.resize(cloud.size());
  for (std::size_t i = 0; i < ys.size(); ++i) r.sample_to_cloud[i] = cloud.nearest(ys[i]).index;
  for (std::size_t j = 0; j < cloud.size(); ++j) r.cloud_to_sample[j] = sample_index.nearest(cloud.point(j)).index;

  Tape<T>& tape = *samples.positions.tape;
  Var<T> fwd = ad::sub(samples.positions, tape.constant(point_rows<T>(cloud.points(), r.sample_to_cloud)));
  Var<T> bwd = ad::sub(ad::gather_rows(samples.positions, r.cloud_to_sample),
                       tape.constant(point_rows<T>(cloud.points())));
  if (squared) {
    r.value = ad::add(ad::sum(ad::mul(fwd, fwd)), ad::sum(ad::mul(bwd, bwd)));
  } else {
    r.value = ad::add(ad::sum(ad::norm_rows(fwd)), ad::sum(ad::norm_rows(bwd)));
  }
  return r;
}

/// Which way beams leave a sample, relative to its face normal.
enum class BeamDirection { Forward, Backward, Both };

/// Beam-gap term: every sample without a mutual k-NN good fit casts a beam of radius
/// `epsilon` along its face normal; the first cloud point hit adds the squared distance
/// to it. With BeamDirection::Both the closer of the two hits is used. Hits are constants.
template <std::floating_point T>
Var<T> beam_gap(const SampleBatch<T>& samples, const PointIndex& cloud, double epsilon, std::size_t k,
                BeamDirection direction = BeamDirection::Both) {
  Tape<T>& tape = *samples.positions.tape;
  const std::vector<Vec3> ys = samples.points();
  const std::vector<bool> good = mutual_knn_mask(ys, cloud, std::min(k, cloud.size()));
  const Tensor<T>& nv = samples.normals.value();
  std::vector<int> rows;
  std::vector<int> hits;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (good[i]) continue;
    const Vec3 n(nv.at(i, 0), nv.at(i, 1), nv.at(i, 2));
    if (n.squaredNorm() == 0.0) continue;
    std::optional<int> best;
    double best_d2 = std::numeric_limits<double>::infinity();
    auto consider = [&](const Vec3& dir) {
      if (auto h = cloud.beam_query(ys[i], dir, epsilon)) {
        const double d2 = squared_distance(ys[i], cloud.point(*h));
        if (d2 < best_d2) {
          best_d2 = d2;
          best = h;
        }
      }
    };
    if (direction != BeamDirection::Backward) consider(n);
    if (direction != BeamDirection::Forward) consider(-n);
    if (best) {
      rows.push_back(static_cast<int>(i));
      hits.push_back(*best);
    }
  }
  if (rows.empty()) return tape.constant(Tensor<T>({1}));
  Var<T> diff = ad::sub(ad::gather_rows(samples.positions, rows), tape.constant(point_rows<T>(cloud.points(), hits)));
  return ad::sum(ad::mul(diff, diff));
}

/// Mean of 1 - |n_x . n_y| over cloud points x paired with their nearest sample y
/// (1 - n_x . n_y when `oriented`). Returns nothing when the cloud has no normals.
template <std::floating_point T>
std::optional<Var<T>> normal_penalty(std::span<const Vec3> cloud_normals, const SampleBatch<T>& samples,
                                     std::span<const int> cloud_to_sample, bool oriented = false) {
  if (cloud_normals.empty()) return std::nullopt;
  if (cloud_normals.size() != cloud_to_sample.size()) {
    throw NumericError("normal_penalty: " + std::to_string(cloud_normals.size()) + " normals for " +
                       std::to_string(cloud_to_sample.size()) + " pairings");
  }
  Tape<T>& tape = *samples.normals.tape;
  Tensor<T> nx({cloud_normals.size(), 3});
  for (std::size_t i = 0; i < cloud_normals.size(); ++i) {
    const double len = cloud_normals[i].norm();
    for (int k = 0; k < 3; ++k) nx.at(i, k) = static_cast<T>(len > 0.0 ? cloud_normals[i][k] / len : 0.0);
  }
  Var<T> paired = ad::gather_rows(samples.normals, std::vector<int>(cloud_to_sample.begin(), cloud_to_sample.end()));
  Var<T> dots = ad::sum_cols(ad::mul(paired, tape.constant(std::move(nx))));
  if (!oriented) dots = ad::abs(dots);
  return ad::add_scalar(ad::scale(ad::mean(dots), T(-1)), T(1));
}

struct LossWeights {
  double chamfer = 1.0;
  double beam = 0.05;
  double normal = 0.1;
  int beam_cadence = 5;     // beam term on iterations divisible by this
  int beam_first_level = 1;  // zero-based: 1 is the second level

  bool beam_active(int iteration, int level) const {
    return beam > 0.0 && beam_cadence > 0 && level >= beam_first_level && iteration % beam_cadence == 0;
  }
  void validate() const {
    if (!(chamfer >= 0.0 && beam >= 0.0 && normal >= 0.0)) throw NumericError("loss weights must be non-negative");
    if (beam_cadence < 1) throw NumericError("beam cadence must be at least 1");
  }
};

template <std::floating_point T>
struct LossTerms {
  Var<T> chamfer;
  std::optional<Var<T>> beam;
  std::optional<Var<T>> normal;
};

/// Weighted sum of the available terms; the beam term counts only on its cadence.
template <std::floating_point T>
Var<T> total_loss(const LossTerms<T>& terms, const LossWeights& w, int iteration, int level) {
  Var<T> total = ad::scale(terms.chamfer, static_cast<T>(w.chamfer));
  if (terms.beam && w.beam_active(iteration, level)) total = ad::add(total, ad::scale(*terms.beam, static_cast<T>(w.beam)));
  if (terms.normal && w.normal > 0.0) total = ad::add(total, ad::scale(*terms.normal, static_cast<T>(w.normal)));
  return total;
}

}  // namespace p2m::loss
