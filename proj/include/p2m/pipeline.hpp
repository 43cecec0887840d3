#pragma once

#include "p2m/cloud.hpp"
#include "p2m/losses.hpp"
#include "p2m/nn/prior_net.hpp"
#include "p2m/remesh.hpp"

#include <functional>
#include <iosfwd>

namespace p2m {

enum class Precision { Single, Double };

/// Per-run optimization settings shared by every level.
struct LevelSchedule {
  int iterations = 1000;               // K, per level
  std::size_t initial_faces = 2000;
  double face_growth = 1.5;
  std::size_t max_faces = 20000;
  std::size_t samples_start = 15000;   // R_0
  std::size_t samples_end = 25000;     // R_K
  int max_levels = 4;
  loss::LossWeights weights;
  double learning_rate = 1.1e-3;
  nn::PriorNetConfig net;              // net.seed is replaced per level
  int part_grid = 2;                   // n x n parts once faces exceed part_threshold
  std::size_t part_threshold = 10000;
  double part_margin = 0.05;
  std::size_t remesh_budget = 20000;   // voxels meeting the surface between levels
  double beam_spacing_factor = 0.99;   // beam radius in units of the mean cloud spacing
  std::size_t mutual_k = 5;
  loss::BeamDirection beam_direction = loss::BeamDirection::Both;
  bool squared_chamfer = false;
  double min_improvement = 1e-4;       // stop once saturated and a level improves less than this
  Precision precision = Precision::Single;
  std::uint64_t seed = 0;

  void validate() const;

  /// Sample count at iteration t of a level: linear from R_0 at t = 0 to R_K at t = K.
  std::size_t samples_at(int iteration) const;
};

/// One optimization step as logged.
struct IterationRecord {
  int iteration = 0;  // global, monotone across levels
  int level = 0;
  double chamfer = 0.0;
  double beam = 0.0;    // 0 on iterations without the beam term
  double normal = 0.0;  // 0 when the cloud has no normals
  double total = 0.0;
  double ms = 0.0;
  std::size_t samples = 0;
};

struct LevelRecord {
  int level = 0;
  std::size_t vertices = 0, edges = 0, faces = 0;
  std::size_t parts = 1;
  std::size_t samples_start = 0, samples_end = 0;
  int iterations = 0;
  double first_total = 0.0, last_total = 0.0;
  double first_chamfer = 0.0, last_chamfer = 0.0;
  double first_displacement = 0.0;  // largest vertex offset produced by the level's first forward pass
  double seconds = 0.0;
};

struct RunLog {
  std::vector<IterationRecord> iterations;
  std::vector<LevelRecord> levels;
  std::vector<std::string> notes;

  /// `iter=<n> level=<l> chamfer=<f> beam=<f> normal=<f> total=<f> ms=<f>`; ms prints
  /// as 0 when `timing` is false so that repeated runs compare equal.
  static std::string format(const IterationRecord& r, bool timing = true);
  static std::string format(const LevelRecord& r, bool timing = true);
  void write(std::ostream& out, bool timing = true) const;
};

/// Called after every iteration (for progress output).
using IterationObserver = std::function<void(const IterationRecord&)>;

/// Fixed inputs of one run, in the normalized frame.
class Target {
 public:
  explicit Target(const PointCloud& cloud);

  const PointCloud& cloud() const { return cloud_; }
  const PointIndex& index() const { return index_; }
  double mean_spacing() const { return spacing_; }

 private:
  PointCloud cloud_;
  PointIndex index_;
  double spacing_ = 0.0;
};

/// Deforms `mesh` for one level: the network (or, when `direct`, a free per-vertex
/// offset) is freshly initialized from `rng` and optimized for K iterations.
Mesh run_level(const Target& target, const Mesh& mesh, const LevelSchedule& schedule, int level, Rng& rng,
               RunLog& log, bool direct = false, const IterationObserver& observer = {});

/// As run_level, but each iteration runs the network on every part of an n x n split
/// separately, accumulates gradients and takes one optimizer step; the level result
/// averages shared vertices. grid_n = 1 reproduces run_level exactly.
Mesh run_level_parts(const Target& target, const Mesh& mesh, int grid_n, const LevelSchedule& schedule, int level,
                     Rng& rng, RunLog& log, bool direct = false, const IterationObserver& observer = {});

enum class InitMode { ConvexHull, CoarseShell, File };

struct InitConfig {
  InitMode mode = InitMode::ConvexHull;
  remesh::ShellConfig shell;  // target_faces is replaced by the schedule's initial_faces
  Mesh file_mesh;             // original coordinates, used with InitMode::File
};

/// Watertight starting mesh with about `schedule.initial_faces` faces, in the frame of `target`.
Mesh initial_mesh(const Target& target, const InitConfig& init, const Similarity& frame, const LevelSchedule& schedule);

struct Reconstruction {
  Mesh mesh;  // original coordinates
  RunLog log;
};

/// The coarse-to-fine loop: normalize, build the initial mesh, then alternate
/// run_level and next_level_mesh, re-initializing weights, code and optimizer at
/// every level.
Reconstruction run_reconstruction(const PointCloud& cloud, const InitConfig& init, const LevelSchedule& schedule,
                                  const IterationObserver& observer = {});

/// Same loop with per-vertex offsets as the optimized parameters instead of a network.
Reconstruction run_direct(const PointCloud& cloud, const InitConfig& init, const LevelSchedule& schedule,
                          const IterationObserver& observer = {});

}  // namespace p2m
