#include "p2m/pipeline.hpp"

#include "p2m/ad/adam.hpp"
#include "p2m/part_mesh.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <memory>
#include <numeric>
#include <ostream>

namespace p2m {

void LevelSchedule::validate() const {
  if (iterations < 0) throw NumericError("iterations per level must be non-negative");
  if (initial_faces < 4) throw NumericError("initial face count must be at least 4");
  if (!(face_growth > 1.0)) throw NumericError("face growth must be greater than 1");
  if (max_faces < initial_faces) throw NumericError("max faces must be at least the initial face count");
  if (samples_start < 1) throw NumericError("sample count must be positive");
  if (samples_start > samples_end) throw NumericError("samples_start must not exceed samples_end");
  if (max_levels < 1) throw NumericError("max levels must be at least 1");
  if (!(learning_rate > 0.0)) throw NumericError("learning rate must be positive");
  if (part_grid < 1) throw NumericError("part grid must be at least 1");
  if (!(part_margin >= 0.0)) throw NumericError("part margin must be non-negative");
  if (remesh_budget < 8) throw NumericError("remesh budget must be at least 8");
  if (!(beam_spacing_factor > 0.0)) throw NumericError("beam radius factor must be positive");
  if (mutual_k < 1) throw NumericError("mutual k must be at least 1");
  if (!(min_improvement >= 0.0)) throw NumericError("min improvement must be non-negative");
  weights.validate();
}

std::size_t LevelSchedule::samples_at(int iteration) const {
  if (iterations <= 0) return samples_start;
  const double span = static_cast<double>(samples_end - samples_start);
  const double t = static_cast<double>(std::clamp(iteration, 0, iterations)) / iterations;
  return samples_start + static_cast<std::size_t>(std::llround(span * t));
}

std::string RunLog::format(const IterationRecord& r, bool timing) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "iter=%d level=%d chamfer=%.9g beam=%.9g normal=%.9g total=%.9g ms=%.3f", r.iteration,
                r.level, r.chamfer, r.beam, r.normal, r.total, timing ? r.ms : 0.0);
  return buf;
}

std::string RunLog::format(const LevelRecord& r, bool timing) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "level_end level=%d vertices=%zu edges=%zu faces=%zu parts=%zu samples=%zu..%zu iterations=%d "
                "chamfer_first=%.9g chamfer_last=%.9g total_first=%.9g total_last=%.9g displacement_first=%.9g seconds=%.3f",
                r.level, r.vertices, r.edges, r.faces, r.parts, r.samples_start, r.samples_end, r.iterations,
                r.first_chamfer, r.last_chamfer, r.first_total, r.last_total, r.first_displacement,
                timing ? r.seconds : 0.0);
  return buf;
}

void RunLog::write(std::ostream& out, bool timing) const {
  for (const std::string& n : notes) out << "note " << n << '\n';
  std::size_t i = 0;
  for (const LevelRecord& level : levels) {
    for (; i < iterations.size() && iterations[i].level == level.level; ++i) out << format(iterations[i], timing) << '\n';
    out << format(level, timing) << '\n';
  }
  for (; i < iterations.size(); ++i) out << format(iterations[i], timing) << '\n';
}

Target::Target(const PointCloud& cloud) : cloud_(cloud) {
  cloud_.validate();
  if (cloud_.size() < 2) throw NumericError("point cloud needs at least 2 points");
  index_ = PointIndex(cloud_.points);
  spacing_ = p2m::mean_spacing(index_);
  if (!(spacing_ > 0.0)) throw NumericError("point cloud has no distinct neighbours");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// The piece of the mesh one forward pass covers, with the cloud points it is fitted to.
template <class T>
struct PartView {
  const Mesh* mesh = nullptr;
  const std::vector<int>* vertex_map = nullptr;  // null: the whole mesh
  const std::vector<int>* edge_map = nullptr;
  const PointIndex* cloud = nullptr;
  std::vector<Vec3> normals;
  double area = 0.0;
  ad::Tensor<T> base;
};

// Network or free offsets, freshly initialized for one level.
template <class T>
class Deformer {
 public:
  Deformer(const Mesh& mesh, const LevelSchedule& s, Rng& rng, bool direct) : direct_(direct) {
    if (direct_) {
      offsets_ = ad::Parameter<T>("offsets", ad::Tensor<T>({mesh.vertex_count(), 3}));
      adam_ = std::make_unique<ad::Adam<T>>(std::vector<ad::Parameter<T>*>{&offsets_}, ad::AdamConfig{s.learning_rate});
      return;
    }
    nn::PriorNetConfig cfg = s.net;
    cfg.seed = rng.next();
    net_ = std::make_unique<nn::PriorNet<T>>(cfg);
    code_ = nn::EdgeCode<T>(mesh.edge_count(), rng);
    adam_ = std::make_unique<ad::Adam<T>>(net_->parameters(), ad::AdamConfig{s.learning_rate});
  }

  // Vertex positions of `part` after displacement, as a tape variable.
  ad::Var<T> vertices(ad::Tape<T>& tape, const PartView<T>& part) {
    ad::Var<T> base = tape.constant(part.base);
    if (direct_) {
      ad::Var<T> off = tape.parameter(offsets_);
      if (part.vertex_map) off = ad::gather_rows(off, *part.vertex_map);
      return ad::add(base, off);
    }
    ad::Tensor<T> code = part.edge_map ? gather_code(*part.edge_map) : code_.values;
    ad::Var<T> delta_e = net_->forward(tape, code, *part.mesh);
    return ad::add(base, nn::build_delta_v(delta_e, *part.mesh));
  }

  void step() {
    adam_->step();
    adam_->zero_grad();
  }

 private:
  ad::Tensor<T> gather_code(const std::vector<int>& edge_map) const {
    ad::Tensor<T> out({edge_map.size(), nn::kCodeChannels});
    for (std::size_t e = 0; e < edge_map.size(); ++e)
      for (std::size_t c = 0; c < nn::kCodeChannels; ++c) out.at(e, c) = code_.values.at(edge_map[e], c);
    return out;
  }

  bool direct_;
  std::unique_ptr<nn::PriorNet<T>> net_;
  nn::EdgeCode<T> code_;
  ad::Parameter<T> offsets_;
  std::unique_ptr<ad::Adam<T>> adam_;
};

void warn_once(RunLog& log, const std::string& message) {
  if (std::find(log.notes.begin(), log.notes.end(), message) != log.notes.end()) return;
  spdlog::warn("{}", message);
  log.notes.push_back(message);
}

template <class T>
double max_offset(const ad::Tensor<T>& moved, const ad::Tensor<T>& base) {
  double m = 0.0;
  for (std::size_t i = 0; i < base.rows(); ++i)
    for (std::size_t k = 0; k < 3; ++k) m = std::max(m, std::abs(static_cast<double>(moved.at(i, k) - base.at(i, k))));
  return m;
}

// Offsets are added to the double-precision input positions so that a zero offset
// reproduces them exactly.
template <class T>
std::vector<Vec3> final_positions(Deformer<T>& d, const PartView<T>& part) {
  ad::Tape<T> tape;
  tape.set_grad_enabled(false);
  const ad::Tensor<T> moved = d.vertices(tape, part).value();
  std::vector<Vec3> out = part.mesh->vertices();
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) out[i][k] += static_cast<double>(moved.at(i, k) - part.base.at(i, k));
  return out;
}

template <class T>
Mesh optimize(const Target& target, const Mesh& mesh, const PartMesh* split, const LevelSchedule& s, int level,
              Rng& rng, RunLog& log, bool direct, const IterationObserver& observer) {
  s.validate();
  const auto level_start = Clock::now();
  // Drawn first so that network and direct runs see the same samples.
  Rng sample_rng = rng.fork(7);
  Deformer<T> deformer(mesh, s, rng, direct);

  std::vector<PartView<T>> parts;
  std::vector<std::unique_ptr<PointIndex>> part_clouds;
  if (!split) {
    PartView<T> v;
    v.mesh = &mesh;
    v.cloud = &target.index();
    v.normals = target.cloud().normals;
    v.area = mesh.surface_area();
    v.base = nn::vertex_tensor<T>(mesh);
    parts.push_back(std::move(v));
  } else {
    for (std::size_t p = 0; p < split->size(); ++p) {
      const MeshPart& mp = split->parts[p];
      PartView<T> v;
      v.mesh = &mp.mesh;
      v.vertex_map = &mp.vertex_map;
      v.edge_map = &mp.edge_map;
      std::vector<Vec3> pts;
      for (std::size_t i = 0; i < target.cloud().size(); ++i) {
        if (!split->region_contains(p, target.cloud().points[i])) continue;
        pts.push_back(target.cloud().points[i]);
        if (target.cloud().has_normals()) v.normals.push_back(target.cloud().normals[i]);
      }
      part_clouds.push_back(std::make_unique<PointIndex>(std::move(pts)));
      v.cloud = part_clouds.back().get();
      v.area = mp.mesh.surface_area();
      v.base = nn::vertex_tensor<T>(mp.mesh);
      parts.push_back(std::move(v));
    }
  }
  double area_sum = 0.0;
  for (const auto& p : parts) area_sum += p.area;
  if (!target.cloud().has_normals() && s.weights.normal > 0.0) {
    warn_once(log, "point cloud has no normals; normal penalty skipped");
  }
  const double epsilon = s.beam_spacing_factor * target.mean_spacing();

  LevelRecord rec;
  rec.level = level;
  rec.vertices = mesh.vertex_count();
  rec.edges = mesh.edge_count();
  rec.faces = mesh.face_count();
  rec.parts = parts.size();
  rec.samples_start = s.samples_at(0);
  rec.samples_end = s.samples_at(s.iterations);
  rec.iterations = s.iterations;

  for (int t = 0; t < s.iterations; ++t) {
    const auto t0 = Clock::now();
    IterationRecord it;
    it.iteration = log.iterations.empty() ? 0 : log.iterations.back().iteration + 1;
    it.level = level;
    const std::size_t total_samples = s.samples_at(t);
    const bool beam_on = s.weights.beam_active(t, level);
    for (const PartView<T>& part : parts) {
      if (part.cloud->empty()) continue;
      const std::size_t count =
          parts.size() == 1 ? total_samples
                            : std::max<std::size_t>(1, std::llround(total_samples * part.area / area_sum));
      ad::Tape<T> tape;
      ad::Var<T> verts = deformer.vertices(tape, part);
      if (t == 0) rec.first_displacement = std::max(rec.first_displacement, max_offset(verts.value(), part.base));
      const auto batch = loss::sample_surface(verts, part.mesh->faces(), count, sample_rng);
      const auto ch = loss::chamfer(*part.cloud, batch, s.squared_chamfer);
      loss::LossTerms<T> terms{ch.value, std::nullopt, std::nullopt};
      if (beam_on) terms.beam = loss::beam_gap(batch, *part.cloud, epsilon, s.mutual_k, s.beam_direction);
      if (s.weights.normal > 0.0) {
        terms.normal = loss::normal_penalty(part.normals, batch, ch.cloud_to_sample, target.cloud().oriented);
      }
      const ad::Var<T> total = loss::total_loss(terms, s.weights, t, level);
      const double value = total.value()[0];
      if (!std::isfinite(value)) {
        throw NumericError("level " + std::to_string(level) + " iteration " + std::to_string(t) +
                           ": non-finite loss (chamfer " + std::to_string(ch.value.value()[0]) + ")");
      }
      tape.backward(total);
      it.samples += count;
      it.chamfer += ch.value.value()[0];
      if (terms.beam) it.beam += terms.beam->value()[0];
      if (terms.normal) it.normal += terms.normal->value()[0];
      it.total += value;
    }
    deformer.step();
    it.ms = 1e3 * seconds_since(t0);
    if (t == 0) {
      rec.first_chamfer = it.chamfer;
      rec.first_total = it.total;
    }
    rec.last_chamfer = it.chamfer;
    rec.last_total = it.total;
    log.iterations.push_back(it);
    if (observer) observer(it);
  }

  if (s.iterations == 0) {
    for (const PartView<T>& part : parts) {
      ad::Tape<T> tape;
      tape.set_grad_enabled(false);
      rec.first_displacement = std::max(rec.first_displacement, max_offset(deformer.vertices(tape, part).value(), part.base));
    }
  }
  Mesh out;
  if (!split) {
    out = mesh.with_vertices(final_positions(deformer, parts[0]));
  } else {
    std::vector<std::vector<Vec3>> displaced;
    for (const auto& part : parts) displaced.push_back(final_positions(deformer, part));
    out = merge_parts(*split, displaced);
  }
  rec.seconds = seconds_since(level_start);
  log.levels.push_back(rec);
  return out;
}

template <class... Args>
Mesh optimize_any(Precision p, Args&&... args) {
  return p == Precision::Double ? optimize<double>(std::forward<Args>(args)...) : optimize<float>(std::forward<Args>(args)...);
}

Reconstruction reconstruct(const PointCloud& cloud, const InitConfig& init, const LevelSchedule& s, bool direct,
                           const IterationObserver& observer) {
  s.validate();
  cloud.validate();
  const Similarity frame = unit_diagonal_frame(cloud);
  const Target target(transformed(cloud, frame));
  Reconstruction r;
  Mesh mesh = initial_mesh(target, init, frame, s);
  Rng master(s.seed);
  for (int level = 0; level < s.max_levels; ++level) {
    if (level > 0) mesh = remesh::next_level_mesh(mesh, s.face_growth, s.max_faces, s.remesh_budget);
    Rng level_rng = master.fork(static_cast<std::uint64_t>(level) + 1);
    const bool use_parts = s.part_grid > 1 && mesh.face_count() > s.part_threshold;
    mesh = use_parts ? run_level_parts(target, mesh, s.part_grid, s, level, level_rng, r.log, direct, observer)
                     : run_level(target, mesh, s, level, level_rng, r.log, direct, observer);
    const LevelRecord& done = r.log.levels.back();
    spdlog::info("level {} done: {} faces, chamfer {:.6g} -> {:.6g} in {:.1f} s", level, mesh.face_count(),
                 done.first_chamfer, done.last_chamfer, done.seconds);
    const bool saturated = remesh::next_face_count(mesh.face_count(), s.face_growth, s.max_faces) <= mesh.face_count();
    const double gain = done.first_total > 0.0 ? (done.first_total - done.last_total) / done.first_total : 0.0;
    if (saturated && level > 0 && gain < s.min_improvement) {
      r.log.notes.push_back("stopped after level " + std::to_string(level) + ": face budget saturated and relative gain " +
                            std::to_string(gain) + " below threshold");
      break;
    }
  }
  r.mesh = frame.invert(mesh);
  return r;
}

}  // namespace

Mesh run_level(const Target& target, const Mesh& mesh, const LevelSchedule& schedule, int level, Rng& rng,
               RunLog& log, bool direct, const IterationObserver& observer) {
  return optimize_any(schedule.precision, target, mesh, nullptr, schedule, level, rng, log, direct, observer);
}

Mesh run_level_parts(const Target& target, const Mesh& mesh, int grid_n, const LevelSchedule& schedule, int level,
                     Rng& rng, RunLog& log, bool direct, const IterationObserver& observer) {
  const PartMesh split = split_into_parts(mesh, grid_n, schedule.part_margin);
  for (const std::string& w : split.warnings) warn_once(log, w);
  return optimize_any(schedule.precision, target, mesh, &split, schedule, level, rng, log, direct, observer);
}

namespace {

// Fine enough that the remesher's outward offset stays well below the cloud spacing.
std::size_t init_budget(const LevelSchedule& s) { return std::max<std::size_t>(2000, 4 * s.initial_faces); }

}  // namespace

Mesh initial_mesh(const Target& target, const InitConfig& init, const Similarity& frame, const LevelSchedule& s) {
  const std::vector<Vec3>& pts = target.cloud().points;
  switch (init.mode) {
    case InitMode::ConvexHull: {
      // The hull's long thin triangles are re-tessellated evenly before resizing.
      const Mesh hull = remesh::convex_hull(pts);
      return remesh::resize(remesh::watertight_remesh(hull, init_budget(s)), s.initial_faces);
    }
    case InitMode::CoarseShell: {
      remesh::ShellConfig cfg = init.shell;
      cfg.target_faces = s.initial_faces;
      return remesh::coarse_shell(pts, cfg);
    }
    case InitMode::File: {
      if (init.file_mesh.empty()) throw MeshError("initial mesh file has no faces");
      Mesh m = frame.apply(init.file_mesh);
      if (!is_watertight(m)) {
        m = remesh::resize(remesh::watertight_remesh(m, init_budget(s)), s.initial_faces);
      }
      return m;
    }
  }
  throw NumericError("unknown initial mesh mode");
}

Reconstruction run_reconstruction(const PointCloud& cloud, const InitConfig& init, const LevelSchedule& schedule,
                                  const IterationObserver& observer) {
  return reconstruct(cloud, init, schedule, false, observer);
}

Reconstruction run_direct(const PointCloud& cloud, const InitConfig& init, const LevelSchedule& schedule,
                          const IterationObserver& observer) {
  return reconstruct(cloud, init, schedule, true, observer);
}

}  // namespace p2m
