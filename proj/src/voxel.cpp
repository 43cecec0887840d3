#include "p2m/geometry.hpp"
#include "p2m/remesh.hpp"
#include "p2m/spatial.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace p2m::remesh {

namespace {

// Corner c of a cell has offset (c & 1, (c >> 1) & 1, (c >> 2) & 1).
constexpr std::array<std::array<int, 4>, 6> kTets{{
    {0, 1, 3, 7},
    {0, 1, 5, 7},
    {0, 2, 3, 7},
    {0, 2, 6, 7},
    {0, 4, 5, 7},
    {0, 4, 6, 7},
}};

struct IsoBuilder {
  const ScalarGrid& grid;
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::unordered_map<std::uint64_t, int> edge_vertex;

  int vertex_on(std::size_t a, std::size_t b, const Vec3& pa, const Vec3& pb) {
    if (a > b) return vertex_on(b, a, pb, pa);
    const std::uint64_t key = (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    const double va = grid.values[a];
    const double vb = grid.values[b];
    const double t = va / (va - vb);
    const int id = static_cast<int>(vertices.size());
    vertices.push_back(pa + t * (pb - pa));
    edge_vertex.emplace(key, id);
    return id;
  }
};

}  // namespace

Mesh extract_isosurface(const ScalarGrid& grid) {
  const auto [nx, ny, nz] = grid.dims;
  if (nx < 2 || ny < 2 || nz < 2) throw NumericError("extract_isosurface: grid needs at least 2 nodes per axis");
  if (grid.values.size() != static_cast<std::size_t>(nx) * ny * nz) throw NumericError("extract_isosurface: value count mismatch");
  if (static_cast<std::uint64_t>(nx) * ny * nz >= (1ULL << 32)) throw NumericError("extract_isosurface: grid too large");
  IsoBuilder b{grid, {}, {}, {}};
  std::array<std::size_t, 8> id;
  std::array<Eigen::Vector3i, 8> cell;
  std::array<Vec3, 8> pos;
  for (int k = 0; k + 1 < nz; ++k)
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i + 1 < nx; ++i) {
        int inside = 0;
        for (int c = 0; c < 8; ++c) {
          cell[c] = Eigen::Vector3i(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1));
          id[c] = grid.index(cell[c].x(), cell[c].y(), cell[c].z());
          inside += grid.values[id[c]] < 0.0 ? 1 : 0;
        }
        if (inside == 0 || inside == 8) continue;
        for (int c = 0; c < 8; ++c) pos[c] = grid.position(cell[c].x(), cell[c].y(), cell[c].z());
        for (const auto& tet : kTets) {
          std::array<int, 4> in{}, out{};
          int ni = 0, no = 0;
          for (int c : tet) {
            if (grid.values[id[c]] < 0.0) {
              in[ni++] = c;
            } else {
              out[no++] = c;
            }
          }
          if (ni == 0 || no == 0) continue;
          // Crossing edges as a cycle of (inside, outside) corner pairs.
          std::vector<std::array<int, 2>> cycle;
          if (ni == 1) {
            cycle = {{in[0], out[0]}, {in[0], out[1]}, {in[0], out[2]}};
          } else if (no == 1) {
            cycle = {{in[0], out[0]}, {in[1], out[0]}, {in[2], out[0]}};
          } else {
            cycle = {{in[0], out[0]}, {in[0], out[1]}, {in[1], out[1]}, {in[1], out[0]}};
          }
          // Orientation from doubled integer midpoints (exact), then checked against
          // the inside-to-outside direction.
          std::vector<Eigen::Vector3i> mid;
          for (const auto& [a, c] : cycle) mid.push_back(cell[a] + cell[c]);
          Eigen::Vector3i dir = Eigen::Vector3i::Zero();
          for (int q = 0; q < no; ++q) dir += ni * cell[out[q]];
          for (int q = 0; q < ni; ++q) dir -= no * cell[in[q]];
          const Eigen::Vector3i nrm = (mid[1] - mid[0]).cross(mid[2] - mid[0]);
          const bool keep = nrm.dot(dir) > 0;
          std::vector<int> verts;
          for (const auto& [a, c] : cycle) verts.push_back(b.vertex_on(id[a], id[c], pos[a], pos[c]));
          if (!keep) std::reverse(verts.begin(), verts.end());
          b.faces.push_back({verts[0], verts[1], verts[2]});
          if (verts.size() == 4) b.faces.push_back({verts[0], verts[2], verts[3]});
        }
      }
  return Mesh(std::move(b.vertices), std::move(b.faces));
}

namespace {

// Grid covering `box` grown by `pad` on every side.
ScalarGrid make_grid(const BoundingBox& box, double spacing, double pad) {
  ScalarGrid g;
  g.spacing = spacing;
  g.origin = box.min - Vec3::Constant(pad);
  const Vec3 extent = box.extent() + Vec3::Constant(2.0 * pad);
  for (int a = 0; a < 3; ++a) {
    const double n = std::ceil(extent[a] / spacing) + 1.0;
    if (n > 2048.0) throw NumericError("voxel grid of " + std::to_string(n) + " nodes per axis is too large; lower the budget");
    g.dims[a] = std::max(2, static_cast<int>(n));
  }
  g.values.assign(static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2], std::numeric_limits<double>::infinity());
  return g;
}

// Node index range [lo, hi] whose positions fall within [a - r, b + r] on axis `ax`.
std::pair<int, int> node_range(const ScalarGrid& g, int ax, double a, double b, double r) {
  const int lo = std::max(0, static_cast<int>(std::floor((a - r - g.origin[ax]) / g.spacing)));
  const int hi = std::min(g.dims[ax] - 1, static_cast<int>(std::ceil((b + r - g.origin[ax]) / g.spacing)));
  return {lo, hi};
}

// Converts unsigned distances (stored in g.values) into an inside/outside field: nodes
// reachable from the grid corner without entering the band d < radius are outside.
void close_band(ScalarGrid& g, double radius) {
  const auto [nx, ny, nz] = g.dims;
  const std::size_t n = g.values.size();
  std::vector<char> outside(n, 0);
  std::vector<std::size_t> stack;
  auto push = [&](std::size_t idx) {
    if (!outside[idx] && !(g.values[idx] < radius)) {
      outside[idx] = 1;
      stack.push_back(idx);
    }
  };
  push(0);
  while (!stack.empty()) {
    const std::size_t idx = stack.back();
    stack.pop_back();
    const int i = static_cast<int>(idx % nx);
    const int j = static_cast<int>((idx / nx) % ny);
    const int k = static_cast<int>(idx / (static_cast<std::size_t>(nx) * ny));
    if (i > 0) push(idx - 1);
    if (i + 1 < nx) push(idx + 1);
    if (j > 0) push(idx - nx);
    if (j + 1 < ny) push(idx + nx);
    if (k > 0) push(idx - static_cast<std::size_t>(nx) * ny);
    if (k + 1 < nz) push(idx + static_cast<std::size_t>(nx) * ny);
  }
  // Keep node values away from zero so no extracted vertex lands on a node.
  const double delta = 1e-6 * g.spacing;
  for (std::size_t idx = 0; idx < n; ++idx) {
    const double d = g.values[idx];
    if (outside[idx]) {
      g.values[idx] = std::clamp(d - radius, delta, g.spacing);
    } else if (d < radius) {
      g.values[idx] = std::min(d - radius, -delta);
    } else {
      g.values[idx] = -g.spacing;
    }
  }
}

void require_closed_result(const Mesh& m, const char* what) {
  if (m.empty() || !is_watertight(m)) {
    throw NumericError(std::string(what) + ": voxel budget too small to resolve the surface; use a larger budget");
  }
}

}  // namespace

void ShellConfig::validate() const {
  if (leaf_budget < 8) throw NumericError("shell resolution must be at least 8 voxels");
  if (target_faces < 4) throw NumericError("shell target faces must be at least 4");
  if (!(dilation_voxels >= 0.0)) throw NumericError("shell dilation must be non-negative");
}

Mesh coarse_shell(std::span<const Vec3> points, const ShellConfig& cfg) {
  cfg.validate();
  if (points.empty()) throw NumericError("coarse_shell: empty point cloud");
  if (cfg.leaf_budget > points.size()) {
    throw NumericError("coarse_shell: " + std::to_string(points.size()) + " points cannot occupy " +
                       std::to_string(cfg.leaf_budget) + " voxels; lower the budget");
  }
  const BoundingBox box = bounding_box(points);
  const double diag = std::max(box.diagonal(), 1e-12);

  // Voxel size with about leaf_budget occupied voxels (occupancy scales like 1/h^2).
  double h = diag / std::cbrt(static_cast<double>(cfg.leaf_budget));
  for (int iter = 0; iter < 12; ++iter) {
    std::unordered_set<std::uint64_t> occupied;
    for (const Vec3& p : points) {
      const Vec3 c = ((p - box.min) / h).array().floor();
      occupied.insert((static_cast<std::uint64_t>(c.x()) << 42) | (static_cast<std::uint64_t>(c.y()) << 21) |
                      static_cast<std::uint64_t>(c.z()));
    }
    const double ratio = static_cast<double>(occupied.size()) / static_cast<double>(cfg.leaf_budget);
    if (std::abs(ratio - 1.0) < 0.05) break;
    h *= std::sqrt(ratio);
  }

  // A point inside a voxel is within half a voxel diagonal of its corners.
  const double radius = cfg.dilation_voxels * h + 0.5 * std::sqrt(3.0) * h;
  ScalarGrid g = make_grid(box, h, radius + 2.0 * h);
  for (const Vec3& p : points) {
    const auto [i0, i1] = node_range(g, 0, p.x(), p.x(), radius);
    const auto [j0, j1] = node_range(g, 1, p.y(), p.y(), radius);
    const auto [k0, k1] = node_range(g, 2, p.z(), p.z(), radius);
    for (int k = k0; k <= k1; ++k)
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
          double& v = g.values[g.index(i, j, k)];
          v = std::min(v, (g.position(i, j, k) - p).norm());
        }
  }
  close_band(g, radius);
  Mesh shell = extract_isosurface(g);
  require_closed_result(shell, "coarse_shell");
  return resize(shell, cfg.target_faces);
}

double remesh_voxel_size(const Mesh& mesh, std::size_t leaf_budget) {
  if (leaf_budget < 8) throw NumericError("remesh budget must be at least 8 voxels");
  const double area = mesh.surface_area();
  if (!(area > 0.0)) throw NumericError("watertight_remesh: mesh has zero area");
  // A plane of area A meets about 1.5 A / h^2 cubes of edge h on average over orientations.
  return std::sqrt(1.5 * area / static_cast<double>(leaf_budget));
}

Mesh watertight_remesh(const Mesh& mesh, std::size_t leaf_budget) {
  if (mesh.empty()) throw NumericError("watertight_remesh: empty mesh");
  const double h = remesh_voxel_size(mesh, leaf_budget);
  const BoundingBox box = mesh.bounds();
  if (box.extent().maxCoeff() < 2.0 * h) {
    throw NumericError("watertight_remesh: budget " + std::to_string(leaf_budget) +
                       " is too small to resolve the surface; use a larger budget");
  }
  const double radius = 0.6 * h;
  ScalarGrid g = make_grid(box, h, radius + 2.0 * h);
  const auto& v = mesh.vertices();
  for (const Face& f : mesh.faces()) {
    const Vec3& a = v[f[0]];
    const Vec3& b = v[f[1]];
    const Vec3& c = v[f[2]];
    const Vec3 lo = a.cwiseMin(b).cwiseMin(c);
    const Vec3 hi = a.cwiseMax(b).cwiseMax(c);
    const auto [i0, i1] = node_range(g, 0, lo.x(), hi.x(), radius);
    const auto [j0, j1] = node_range(g, 1, lo.y(), hi.y(), radius);
    const auto [k0, k1] = node_range(g, 2, lo.z(), hi.z(), radius);
    for (int k = k0; k <= k1; ++k)
      for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
          double& d = g.values[g.index(i, j, k)];
          d = std::min(d, point_triangle_distance(g.position(i, j, k), a, b, c));
        }
  }
  close_band(g, radius);
  Mesh out = extract_isosurface(g);
  require_closed_result(out, "watertight_remesh");
  return out;
}

}  // namespace p2m::remesh
