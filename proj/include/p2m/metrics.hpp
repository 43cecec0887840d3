#pragma once

#include "p2m/mesh.hpp"

#include <span>

namespace p2m {

/// Bounding-volume hierarchy over the triangles of a mesh for exact
/// point-to-surface distance queries.
class SurfaceIndex {
 public:
  explicit SurfaceIndex(const Mesh& mesh);

  struct Hit {
    int face = -1;
    double distance = std::numeric_limits<double>::infinity();
    Vec3 point = Vec3::Zero();
  };

  /// Closest surface point; ties go to the lowest face index.
  Hit closest(const Vec3& p) const;
  double distance(const Vec3& p) const { return closest(p).distance; }

 private:
  struct Node {
    BoundingBox box;
    int begin = 0, end = 0;
    int left = -1, right = -1;
  };
  int build(int begin, int end);
  void query(int node, const Vec3& p, Hit& best) const;

  std::vector<std::array<Vec3, 3>> tris_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

/// Points drawn uniformly by area from the given faces (all faces when `faces` is empty).
std::vector<Vec3> sample_points(const Mesh& mesh, std::size_t count, Rng& rng, std::span<const int> faces = {});

struct FScoreReport {
  double tau = 0.0;           // threshold as a fraction of the truth bounding-box diagonal
  double tau_distance = 0.0;  // absolute threshold
  double precision = 0.0;     // percent
  double recall = 0.0;        // percent
  double f_score = 0.0;       // percent
  std::size_t precision_samples = 0;
  std::size_t recall_samples = 0;
};

/// Harmonic mean of two percentages; 0 when both are 0.
double harmonic_mean(double precision, double recall);

/// Precision: share of reconstruction samples within tau of the truth surface.
/// Recall: share of truth samples within tau of the reconstruction surface.
/// Needs at least 10000 samples per side.
FScoreReport f_score(const Mesh& recon, const Mesh& truth, double tau = 0.01, std::size_t samples = 100000,
                     std::uint64_t seed = 0);

/// As f_score, but recall samples come only from the truth faces in `missing_faces`.
FScoreReport f_score_completion(const Mesh& recon, const Mesh& truth, std::span<const int> missing_faces,
                                double tau = 0.01, std::size_t samples = 100000, std::uint64_t seed = 0);

/// Faces whose centroid lies within `radius` of `center`.
std::vector<int> faces_within(const Mesh& mesh, const Vec3& center, double radius);

}  // namespace p2m
