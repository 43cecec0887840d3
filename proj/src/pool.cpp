#include "p2m/nn/pool.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace p2m::nn {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

void erase_value(std::vector<int>& v, int x) { v.erase(std::remove(v.begin(), v.end(), x), v.end()); }

bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

class Collapser {
 public:
  explicit Collapser(const Mesh& mesh)
      : faces_(mesh.faces()),
        face_alive_(mesh.face_count(), 1),
        vertex_faces_(mesh.vertex_count()),
        neighbors_(mesh.vertex_count()),
        boundary_(mesh.vertex_count(), 0),
        ends_(mesh.edges()),
        slot_parent_(mesh.edge_count()) {
    std::iota(slot_parent_.begin(), slot_parent_.end(), 0);
    for (std::size_t f = 0; f < faces_.size(); ++f)
      for (int v : faces_[f]) vertex_faces_[v].push_back(static_cast<int>(f));
    for (std::size_t e = 0; e < ends_.size(); ++e) {
      const auto [a, b] = ends_[e];
      neighbors_[a].push_back(b);
      neighbors_[b].push_back(a);
      slot_of_.emplace(edge_key(a, b), static_cast<int>(e));
      if (mesh.topology().is_boundary(e)) boundary_[a] = boundary_[b] = 1;
    }
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
      if (!vertex_faces_[v].empty()) ++live_vertices_;
    }
    live_edges_ = ends_.size();
  }

  std::size_t live_edges() const { return live_edges_; }

  bool try_collapse(int slot) {
    if (find(slot) != slot) return false;  // already merged away
    const int u = ends_[slot][0];
    const int v = ends_[slot][1];
    if (boundary_[u] || boundary_[v] || live_vertices_ <= 4) return false;

    // Link condition: u and v share exactly the two vertices opposite the edge.
    int common = 0;
    for (int x : neighbors_[u]) common += contains(neighbors_[v], x) ? 1 : 0;
    if (common != 2) return false;

    std::array<int, 2> side_faces{-1, -1};
    int found = 0;
    for (int f : vertex_faces_[u]) {
      if (!face_alive_[f] || !contains_vertex(f, v)) continue;
      if (found == 2) return false;
      side_faces[found++] = f;
    }
    if (found != 2) return false;
    std::sort(side_faces.begin(), side_faces.end());

    // Merge the edge and the first face's (v, w) into (u, w); the second face's (v, w) into (u, w).
    std::array<int, 2> apex{};
    for (int k = 0; k < 2; ++k) {
      const int f = side_faces[k];
      const int w = apex[k] = opposite(f, u, v);
      const int keep = slot_of_.at(edge_key(u, w));
      const int gone = slot_of_.at(edge_key(v, w));
      slot_parent_[gone] = keep;
      slot_of_.erase(edge_key(v, w));
      if (k == 0) slot_parent_[slot] = keep;
      face_alive_[f] = 0;
    }
    slot_of_.erase(edge_key(u, v));
    live_edges_ -= 3;

    // Every remaining edge (v, x) becomes (u, x).
    for (int x : neighbors_[v]) {
      if (x == u) continue;
      auto it = slot_of_.find(edge_key(v, x));
      if (it == slot_of_.end()) continue;  // merged above
      const int s = it->second;
      slot_of_.erase(it);
      ends_[s] = {std::min(u, x), std::max(u, x)};
      slot_of_.emplace(edge_key(u, x), s);
    }
    for (int x : neighbors_[v]) {
      erase_value(neighbors_[x], v);
      if (x != u && !contains(neighbors_[x], u)) neighbors_[x].push_back(u);
      if (x != u && !contains(neighbors_[u], x)) neighbors_[u].push_back(x);
    }
    erase_value(neighbors_[u], v);
    neighbors_[v].clear();

    for (int f : vertex_faces_[v]) {
      if (!face_alive_[f]) continue;
      for (int& c : faces_[f]) {
        if (c == v) c = u;
      }
      vertex_faces_[u].push_back(f);
    }
    vertex_faces_[v].clear();
    for (int w : {u, apex[0], apex[1]}) {
      auto& list = vertex_faces_[w];
      list.erase(std::remove_if(list.begin(), list.end(), [&](int f) { return !face_alive_[f]; }), list.end());
    }
    --live_vertices_;
    return true;
  }

  PoolRecord finish(std::size_t old_count) {
    std::vector<int> remap(vertex_faces_.size(), -1);
    std::vector<Face> faces;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      if (face_alive_[f]) faces.push_back(faces_[f]);
    }
    for (const Face& f : faces)
      for (int v : f) remap[v] = 0;
    int next = 0;
    for (int& r : remap) {
      if (r == 0) r = next++;
    }
    for (Face& f : faces)
      for (int& v : f) v = remap[v];

    PoolRecord rec;
    rec.old_count = old_count;
    rec.coarse = Mesh(std::vector<Vec3>(static_cast<std::size_t>(next), Vec3::Zero()), std::move(faces));
    rec.new_count = rec.coarse.edge_count();
    const auto& coarse_edges = rec.coarse.edges();
    auto parent = std::make_shared<std::vector<int>>(old_count);
    for (std::size_t s = 0; s < old_count; ++s) {
      const int root = find(static_cast<int>(s));
      const Edge key{remap[ends_[root][0]], remap[ends_[root][1]]};
      const Edge sorted{std::min(key[0], key[1]), std::max(key[0], key[1])};
      const auto it = std::lower_bound(coarse_edges.begin(), coarse_edges.end(), sorted);
      if (it == coarse_edges.end() || *it != sorted) throw MeshError("pool: lost track of a merged edge");
      (*parent)[s] = static_cast<int>(it - coarse_edges.begin());
    }
    rec.parent = std::move(parent);
    return rec;
  }

 private:
  bool contains_vertex(int f, int v) const {
    const Face& t = faces_[f];
    return t[0] == v || t[1] == v || t[2] == v;
  }
  // Third vertex of face f, not equal to a or b.
  int opposite(int f, int a, int b) const {
    for (int c : faces_[f]) {
      if (c != a && c != b) return c;
    }
    return -1;
  }
  int find(int s) {
    while (slot_parent_[s] != s) s = slot_parent_[s] = slot_parent_[slot_parent_[s]];
    return s;
  }

  std::vector<Face> faces_;
  std::vector<char> face_alive_;
  std::vector<std::vector<int>> vertex_faces_;
  std::vector<std::vector<int>> neighbors_;
  std::vector<char> boundary_;
  std::vector<Edge> ends_;
  std::vector<int> slot_parent_;
  std::unordered_map<std::uint64_t, int> slot_of_;
  std::size_t live_vertices_ = 0;
  std::size_t live_edges_ = 0;
};

}  // namespace

PoolRecord pool_edges(const Mesh& mesh, std::span<const double> priorities, std::size_t target_edges) {
  const std::size_t n = mesh.edge_count();
  if (priorities.size() != n) {
    throw NumericError("pool: " + std::to_string(priorities.size()) + " priorities for " + std::to_string(n) + " edges");
  }
  if (target_edges >= n) {
    PoolRecord rec;
    auto parent = std::make_shared<std::vector<int>>(n);
    std::iota(parent->begin(), parent->end(), 0);
    rec.parent = std::move(parent);
    rec.old_count = rec.new_count = n;
    rec.coarse = mesh;
    return rec;
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return priorities[a] < priorities[b] || (priorities[a] == priorities[b] && a < b);
  });
  Collapser c(mesh);
  bool progress = true;
  while (c.live_edges() > target_edges && progress) {
    progress = false;
    for (int e : order) {
      if (c.live_edges() <= target_edges) break;
      progress = c.try_collapse(e) || progress;
    }
  }
  return c.finish(n);
}

}  // namespace p2m::nn
