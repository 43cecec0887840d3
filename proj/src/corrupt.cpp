#include "p2m/corrupt.hpp"

namespace p2m {

void CorruptionSpec::validate() const {
  auto probability = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw NumericError("noise sigma must be >= 0");
  if (regions < 0) throw NumericError("region count must be >= 0");
  if (!(region_radius > 0.0) || !std::isfinite(region_radius)) throw NumericError("region radius must be > 0");
  if (!probability(region_keep)) throw NumericError("region keep frequency must lie in [0, 1]");
  if (!probability(normal_flip)) throw NumericError("normal flip probability must lie in [0, 1]");
}

CorruptedCloud corrupt_cloud(const PointCloud& cloud, const CorruptionSpec& spec) {
  spec.validate();
  cloud.validate();
  const double diag = cloud.bounds().diagonal();
  Rng master(spec.seed);
  Rng region_rng = master.fork(1);
  Rng noise_rng = master.fork(2);
  Rng flip_rng = master.fork(3);

  CorruptedCloud out;
  out.region_radius = spec.region_radius * diag;
  for (int r = 0; r < spec.regions; ++r) out.region_centers.push_back(cloud.points[region_rng.below(cloud.size())]);

  const double r2 = out.region_radius * out.region_radius;
  PointCloud& result = out.cloud;
  result.oriented = cloud.oriented;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    bool inside = false;
    for (const Vec3& c : out.region_centers) inside = inside || (p - c).squaredNorm() <= r2;
    // Draw for every point so the stream does not depend on which points are inside.
    const bool keep = region_rng.uniform() < spec.region_keep;
    if (inside && !keep) continue;
    result.points.push_back(p);
    if (cloud.has_normals()) result.normals.push_back(cloud.normals[i]);
  }
  if (result.points.empty()) throw NumericError("corrupt_cloud: every point was removed");

  if (spec.noise_sigma > 0.0) {
    const double sigma = spec.noise_sigma * diag;
    for (Vec3& p : result.points) {
      for (int k = 0; k < 3; ++k) p[k] += sigma * noise_rng.normal();
    }
  }
  if (spec.normal_flip > 0.0) {
    for (Vec3& n : result.normals) {
      if (flip_rng.uniform() < spec.normal_flip) n = -n;
    }
  }
  return out;
}

}  // namespace p2m
