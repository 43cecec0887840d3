#include "p2m/mesh.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <sstream>

namespace p2m {

namespace {

struct HalfEdgeRecord {
  int lo, hi;
  int face;
  int slot;  // position of the edge within the face (edge slot k joins corners k and k+1)
};

}  // namespace

EdgeTopology build_edge_adjacency(std::span<const Face> faces, std::size_t vertex_count) {
  const auto n = static_cast<int>(vertex_count);
  std::vector<HalfEdgeRecord> records;
  records.reserve(faces.size() * 3);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& tri = faces[f];
    for (int k = 0; k < 3; ++k) {
      const int v = tri[k];
      if (v < 0 || v >= n) {
        std::ostringstream msg;
        msg << "face " << f << " references vertex " << v << " outside [0, " << n << ")";
        throw MeshError(msg.str());
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      std::ostringstream msg;
      msg << "face " << f << " repeats a vertex (" << tri[0] << ", " << tri[1] << ", " << tri[2] << ")";
      throw MeshError(msg.str());
    }
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k];
      const int b = tri[(k + 1) % 3];
      records.push_back({std::min(a, b), std::max(a, b), static_cast<int>(f), k});
    }
  }
  std::sort(records.begin(), records.end(), [](const HalfEdgeRecord& x, const HalfEdgeRecord& y) {
    if (x.lo != y.lo) return x.lo < y.lo;
    if (x.hi != y.hi) return x.hi < y.hi;
    return x.face < y.face;
  });

  EdgeTopology topo;
  topo.face_edges.assign(faces.size(), {-1, -1, -1});
  for (std::size_t i = 0; i < records.size();) {
    std::size_t j = i;
    while (j < records.size() && records[j].lo == records[i].lo && records[j].hi == records[i].hi) ++j;
    if (j - i > 2) {
      std::ostringstream msg;
      msg << "non-manifold edge (" << records[i].lo << ", " << records[i].hi << ") shared by " << (j - i)
          << " faces";
      throw MeshError(msg.str());
    }
    const int e = static_cast<int>(topo.edges.size());
    topo.edges.push_back({records[i].lo, records[i].hi});
    topo.faces.push_back({records[i].face, j - i == 2 ? records[i + 1].face : -1});
    for (std::size_t r = i; r < j; ++r) topo.face_edges[records[r].face][records[r].slot] = e;
    i = j;
  }

  topo.neighbors.resize(topo.edges.size());
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    std::array<int, 4> nb{};
    for (int side = 0; side < 2; ++side) {
      int f = topo.faces[e][side];
      if (f < 0) f = topo.faces[e][0];
      const auto& fe = topo.face_edges[f];
      int slot = 0;
      while (fe[slot] != static_cast<int>(e)) ++slot;
      nb[2 * side] = fe[(slot + 1) % 3];
      nb[2 * side + 1] = fe[(slot + 2) % 3];
    }
    topo.neighbors[e] = nb;
  }
  return topo;
}

Mesh::Mesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
  topology_ = build_edge_adjacency(faces_, vertices_.size());
}

void Mesh::set_vertices(std::vector<Vec3> vertices) {
  if (vertices.size() != vertices_.size()) {
    throw MeshError("set_vertices: expected " + std::to_string(vertices_.size()) + " positions, got " +
                    std::to_string(vertices.size()));
  }
  vertices_ = std::move(vertices);
}

Mesh Mesh::with_vertices(std::vector<Vec3> vertices) const {
  Mesh out = *this;
  out.set_vertices(std::move(vertices));
  return out;
}

long Mesh::euler_characteristic() const {
  return static_cast<long>(vertices_.size()) - static_cast<long>(edge_count()) + static_cast<long>(faces_.size());
}

Vec3 Mesh::face_normal(std::size_t f) const {
  const Face& t = faces_[f];
  const Vec3 n = (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double Mesh::face_area(std::size_t f) const {
  const Face& t = faces_[f];
  return 0.5 * (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]).norm();
}

double Mesh::surface_area() const {
  double total = 0.0;
  for (std::size_t f = 0; f < faces_.size(); ++f) total += face_area(f);
  return total;
}

namespace {

// Orientation of edge (lo, hi) as traversed by face f: +1 if lo -> hi, -1 otherwise.
int traversal(const Face& tri, const Edge& e) {
  for (int k = 0; k < 3; ++k) {
    if (tri[k] == e[0] && tri[(k + 1) % 3] == e[1]) return 1;
  }
  return -1;
}

}  // namespace

bool is_orientable(const Mesh& mesh) {
  const auto& topo = mesh.topology();
  const std::size_t nf = mesh.face_count();
  std::vector<int> flip(nf, 0);  // 0 unvisited, +1 keep, -1 flip
  for (std::size_t seed = 0; seed < nf; ++seed) {
    if (flip[seed] != 0) continue;
    flip[seed] = 1;
    std::queue<int> queue;
    queue.push(static_cast<int>(seed));
    while (!queue.empty()) {
      const int f = queue.front();
      queue.pop();
      for (int k = 0; k < 3; ++k) {
        const int e = topo.face_edges[f][k];
        const auto& ef = topo.faces[e];
        const int g = ef[0] == f ? ef[1] : ef[0];
        if (g < 0) continue;
        const auto& edge = topo.edges[e];
        // Consistent neighbors traverse the shared edge in opposite directions.
        const int want = -flip[f] * traversal(mesh.faces()[f], edge) * traversal(mesh.faces()[g], edge);
        if (flip[g] == 0) {
          flip[g] = want;
          queue.push(g);
        } else if (flip[g] != want) {
          return false;
        }
      }
    }
  }
  return true;
}

bool is_consistently_oriented(const Mesh& mesh) {
  const auto& topo = mesh.topology();
  for (std::size_t e = 0; e < topo.size(); ++e) {
    const auto& ef = topo.faces[e];
    if (ef[1] < 0) continue;
    if (traversal(mesh.faces()[ef[0]], topo.edges[e]) == traversal(mesh.faces()[ef[1]], topo.edges[e])) return false;
  }
  return true;
}

bool is_watertight(const Mesh& mesh) {
  if (mesh.empty()) return false;
  const auto& topo = mesh.topology();
  for (std::size_t e = 0; e < topo.size(); ++e) {
    if (topo.is_boundary(e)) return false;
  }
  return is_orientable(mesh);
}

std::size_t component_count(const Mesh& mesh) {
  std::vector<int> parent(mesh.vertex_count());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<char> used(mesh.vertex_count(), 0);
  for (const Face& f : mesh.faces()) {
    for (int k = 0; k < 3; ++k) used[f[k]] = 1;
    parent[find(f[1])] = find(f[0]);
    parent[find(f[2])] = find(f[0]);
  }
  std::size_t count = 0;
  for (std::size_t v = 0; v < parent.size(); ++v) {
    if (used[v] && find(static_cast<int>(v)) == static_cast<int>(v)) ++count;
  }
  return count;
}

long genus(const Mesh& mesh) {
  const long c = static_cast<long>(component_count(mesh));
  return (2 * c - mesh.euler_characteristic()) / 2;
}

double signed_volume(const Mesh& mesh) {
  double vol = 0.0;
  const auto& v = mesh.vertices();
  for (const Face& f : mesh.faces()) vol += v[f[0]].dot(v[f[1]].cross(v[f[2]]));
  return vol / 6.0;
}

Mesh flipped(const Mesh& mesh) {
  std::vector<Face> faces = mesh.faces();
  for (Face& f : faces) std::swap(f[1], f[2]);
  return Mesh(mesh.vertices(), std::move(faces));
}

Mesh remove_unreferenced_vertices(const Mesh& mesh) {
  std::vector<int> remap(mesh.vertex_count(), -1);
  std::vector<Vec3> vertices;
  std::vector<Face> faces = mesh.faces();
  for (Face& f : faces) {
    for (int& v : f) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(vertices.size());
        vertices.push_back(mesh.vertices()[v]);
      }
      v = remap[v];
    }
  }
  return Mesh(std::move(vertices), std::move(faces));
}

}  // namespace p2m
