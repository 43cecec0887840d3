#include "p2m/part_mesh.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace p2m {

bool PartMesh::region_contains(std::size_t i, const Vec3& p) const {
  const BoundingBox& r = parts[i].region;
  for (int axis : grid_axes) {
    if (p[axis] < r.min[axis] || p[axis] > r.max[axis]) return false;
  }
  return true;
}

PartMesh split_into_parts(const Mesh& mesh, int grid_n, double overlap_margin) {
  if (grid_n < 1) throw Error("split_into_parts: grid_n must be >= 1, got " + std::to_string(grid_n));
  if (overlap_margin < 0.0) throw Error("split_into_parts: overlap margin must be non-negative");

  PartMesh out;
  out.parent = mesh;
  out.grid_n = grid_n;
  const BoundingBox box = mesh.bounds();
  const Vec3 extent = box.extent();
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return extent[a] > extent[b]; });
  out.grid_axes = {std::min(order[0], order[1]), std::max(order[0], order[1])};
  out.margin = overlap_margin * box.diagonal();

  if (grid_n == 1) {
    MeshPart part;
    part.mesh = mesh;
    part.vertex_map.resize(mesh.vertex_count());
    std::iota(part.vertex_map.begin(), part.vertex_map.end(), 0);
    part.face_map.resize(mesh.face_count());
    std::iota(part.face_map.begin(), part.face_map.end(), 0);
    part.edge_map.resize(mesh.edge_count());
    std::iota(part.edge_map.begin(), part.edge_map.end(), 0);
    part.region.min = box.min - Vec3::Constant(out.margin + 1.0);
    part.region.max = box.max + Vec3::Constant(out.margin + 1.0);
    out.parts.push_back(std::move(part));
    return out;
  }

  std::map<Edge, int> parent_edge;
  for (std::size_t e = 0; e < mesh.edge_count(); ++e) parent_edge.emplace(mesh.edges()[e], static_cast<int>(e));

  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < grid_n; ++j) {
      BoundingBox cell;
      cell.min = box.min - Vec3::Constant(out.margin);
      cell.max = box.max + Vec3::Constant(out.margin);
      const std::array<int, 2> idx{i, j};
      for (int k = 0; k < 2; ++k) {
        const int axis = out.grid_axes[k];
        const double w = extent[axis] / grid_n;
        cell.min[axis] = box.min[axis] + w * idx[k] - out.margin;
        cell.max[axis] = idx[k] == grid_n - 1 ? box.max[axis] + out.margin : box.min[axis] + w * (idx[k] + 1) + out.margin;
        if (idx[k] == 0) cell.min[axis] = box.min[axis] - out.margin;
      }
      auto inside = [&](const Vec3& p) {
        for (int axis : out.grid_axes) {
          if (p[axis] < cell.min[axis] || p[axis] > cell.max[axis]) return false;
        }
        return true;
      };

      MeshPart part;
      part.region = cell;
      std::vector<int> local(mesh.vertex_count(), -1);
      std::vector<Vec3> vertices;
      std::vector<Face> faces;
      for (std::size_t f = 0; f < mesh.face_count(); ++f) {
        const Face& tri = mesh.faces()[f];
        const bool touches = inside(mesh.vertices()[tri[0]]) || inside(mesh.vertices()[tri[1]]) ||
                             inside(mesh.vertices()[tri[2]]);
        if (!touches) continue;
        Face lf{};
        for (int k = 0; k < 3; ++k) {
          int& slot = local[tri[k]];
          if (slot < 0) {
            slot = static_cast<int>(vertices.size());
            vertices.push_back(mesh.vertices()[tri[k]]);
            part.vertex_map.push_back(tri[k]);
          }
          lf[k] = slot;
        }
        faces.push_back(lf);
        part.face_map.push_back(static_cast<int>(f));
      }
      if (faces.empty()) {
        out.warnings.push_back("part (" + std::to_string(i) + ", " + std::to_string(j) + ") is empty and was dropped");
        continue;
      }
      part.mesh = Mesh(std::move(vertices), std::move(faces));
      part.edge_map.reserve(part.mesh.edge_count());
      for (const Edge& e : part.mesh.edges()) {
        const int a = part.vertex_map[e[0]];
        const int b = part.vertex_map[e[1]];
        part.edge_map.push_back(parent_edge.at({std::min(a, b), std::max(a, b)}));
      }
      out.parts.push_back(std::move(part));
    }
  }
  return out;
}

Mesh merge_parts(const PartMesh& part_mesh, std::span<const std::vector<Vec3>> displaced_parts) {
  if (displaced_parts.size() != part_mesh.parts.size()) {
    throw Error("merge_parts: expected " + std::to_string(part_mesh.parts.size()) + " parts, got " +
                std::to_string(displaced_parts.size()));
  }
  const std::size_t nv = part_mesh.parent.vertex_count();
  // Mean written as first + sum(x_i - first) / n so that identical contributions merge exactly.
  std::vector<Vec3> first(nv, Vec3::Zero());
  std::vector<Vec3> offset(nv, Vec3::Zero());
  std::vector<int> count(nv, 0);
  for (std::size_t p = 0; p < displaced_parts.size(); ++p) {
    const MeshPart& part = part_mesh.parts[p];
    const auto& positions = displaced_parts[p];
    if (positions.size() != part.vertex_map.size()) {
      throw Error("merge_parts: part " + std::to_string(p) + " has " + std::to_string(positions.size()) +
                  " positions, expected " + std::to_string(part.vertex_map.size()));
    }
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const int v = part.vertex_map[i];
      if (count[v] == 0) first[v] = positions[i];
      offset[v] += positions[i] - first[v];
      ++count[v];
    }
  }
  std::vector<Vec3> merged(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    if (count[v] == 0) throw Error("merge_parts: vertex " + std::to_string(v) + " is not covered by any part");
    merged[v] = first[v] + offset[v] / static_cast<double>(count[v]);
  }
  return part_mesh.parent.with_vertices(std::move(merged));
}

}  // namespace p2m
