#pragma once

#include "p2m/cloud.hpp"

namespace p2m {

/// Benchmark corruptions. Lengths are fractions of the cloud's bounding-box diagonal.
struct CorruptionSpec {
  double noise_sigma = 0.0;          // Gaussian noise per coordinate
  int regions = 0;                   // low-density regions
  double region_radius = 0.1;
  double region_keep = 0.0;          // probability that a point inside a region survives
  double normal_flip = 0.0;          // probability of negating each normal
  std::uint64_t seed = 0;

  void validate() const;
};

struct CorruptedCloud {
  PointCloud cloud;
  std::vector<Vec3> region_centers;  // original coordinates
  double region_radius = 0.0;        // absolute
};

/// Region centers are drawn from the input points; removal uses the original
/// positions, noise is applied afterwards. Throws NumericError when no point survives.
CorruptedCloud corrupt_cloud(const PointCloud& cloud, const CorruptionSpec& spec);

}  // namespace p2m
