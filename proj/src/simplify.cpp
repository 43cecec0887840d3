#include "p2m/remesh.hpp"

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <iterator>
#include <map>
#include <queue>

namespace p2m::remesh {

namespace {

using Quadric = Eigen::Matrix4d;

// Weight of the squared edge length relative to the quadric error. It only matters
// where the quadric error is near zero (flat regions), where it favours short edges
// and so keeps triangle sizes even.
constexpr double kUniformity = 0.01;

struct Candidate {
  double cost;
  int u, v;
  std::uint32_t stamp_u, stamp_v;
  Vec3 target;

  bool operator>(const Candidate& o) const {
    if (cost != o.cost) return cost > o.cost;
    if (u != o.u) return u > o.u;
    return v > o.v;
  }
};

class Simplifier {
 public:
  explicit Simplifier(const Mesh& mesh)
      : pos_(mesh.vertices()),
        faces_(mesh.faces()),
        face_alive_(faces_.size(), 1),
        vertex_faces_(pos_.size()),
        quadric_(pos_.size(), Quadric::Zero()),
        area_(pos_.size(), 0.0),
        stamp_(pos_.size(), 0),
        vertex_alive_(pos_.size(), 0) {
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      const Face& t = faces_[f];
      const Vec3 n = (pos_[t[1]] - pos_[t[0]]).cross(pos_[t[2]] - pos_[t[0]]);
      const double len = n.norm();
      const double area = 0.5 * len;
      if (len > 0.0) {
        const Vec3 u = n / len;
        const Eigen::Vector4d plane(u.x(), u.y(), u.z(), -u.dot(pos_[t[0]]));
        const Quadric q = area * plane * plane.transpose();
        for (int v : t) quadric_[v] += q;
      }
      for (int v : t) {
        vertex_faces_[v].push_back(static_cast<int>(f));
        area_[v] += area / 3.0;
        vertex_alive_[v] = 1;
      }
    }
    for (char a : vertex_alive_) live_vertices_ += a;
    live_faces_ = faces_.size();
    for (const Edge& e : mesh.edges()) push(e[0], e[1]);
  }

  std::size_t live_faces() const { return live_faces_; }

  // Collapses the cheapest legal edge; false when none is left.
  bool step() {
    while (!heap_.empty()) {
      const Candidate c = heap_.top();
      heap_.pop();
      if (!vertex_alive_[c.u] || !vertex_alive_[c.v] || stamp_[c.u] != c.stamp_u || stamp_[c.v] != c.stamp_v) continue;
      if (collapse(c.u, c.v, c.target)) return true;
    }
    return false;
  }

  Mesh result() const {
    std::vector<int> remap(pos_.size(), -1);
    std::vector<Vec3> verts;
    std::vector<Face> faces;
    for (std::size_t f = 0; f < faces_.size(); ++f) {
      if (!face_alive_[f]) continue;
      Face out;
      for (int k = 0; k < 3; ++k) {
        int& r = remap[faces_[f][k]];
        if (r < 0) {
          r = static_cast<int>(verts.size());
          verts.push_back(pos_[faces_[f][k]]);
        }
        out[k] = r;
      }
      faces.push_back(out);
    }
    return Mesh(std::move(verts), std::move(faces));
  }

 private:
  void push(int a, int b) {
    const int u = std::min(a, b), v = std::max(a, b);
    const Quadric q = quadric_[u] + quadric_[v];
    auto cost_at = [&](const Vec3& p) {
      const Eigen::Vector4d h(p.x(), p.y(), p.z(), 1.0);
      return std::max(0.0, h.dot(q * h));
    };
    Vec3 best = 0.5 * (pos_[u] + pos_[v]);
    double best_cost = cost_at(best);
    const Eigen::Matrix3d a3 = q.topLeftCorner<3, 3>();
    const Eigen::FullPivLU<Eigen::Matrix3d> lu(a3);
    if (lu.isInvertible() && lu.rcond() > 1e-9) {
      const Vec3 opt = lu.solve(-q.topRightCorner<3, 1>());
      // Keep the optimum near the edge; far solutions come from nearly flat quadrics.
      const double reach = (pos_[u] - pos_[v]).norm();
      if (opt.allFinite() && (opt - best).norm() <= reach) {
        const double c = cost_at(opt);
        if (c <= best_cost) {
          best = opt;
          best_cost = c;
        }
      }
    }
    for (const Vec3& p : {pos_[u], pos_[v]}) {
      const double c = cost_at(p);
      if (c < best_cost) {
        best = p;
        best_cost = c;
      }
    }
    const double len2 = (pos_[u] - pos_[v]).squaredNorm();
    heap_.push({best_cost + kUniformity * (area_[u] + area_[v]) * len2, u, v, stamp_[u], stamp_[v], best});
  }

  bool has_vertex(int f, int v) const {
    const Face& t = faces_[f];
    return t[0] == v || t[1] == v || t[2] == v;
  }

  std::vector<int> neighbors(int v) const {
    std::vector<int> out;
    for (int f : vertex_faces_[v]) {
      if (!face_alive_[f]) continue;
      for (int w : faces_[f]) {
        if (w != v) out.push_back(w);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  bool collapse(int u, int v, const Vec3& target) {
    if (live_vertices_ <= 4) return false;
    const std::vector<int> nu = neighbors(u);
    const std::vector<int> nv = neighbors(v);
    std::vector<int> common;
    std::set_intersection(nu.begin(), nu.end(), nv.begin(), nv.end(), std::back_inserter(common));
    if (common.size() != 2) return false;
    int shared = 0;
    for (int f : vertex_faces_[u]) shared += (face_alive_[f] && has_vertex(f, v)) ? 1 : 0;
    if (shared != 2) return false;

    // Reject collapses that flip or flatten a surviving face.
    for (int w : {u, v}) {
      for (int f : vertex_faces_[w]) {
        if (!face_alive_[f] || (has_vertex(f, u) && has_vertex(f, v))) continue;
        std::array<Vec3, 3> p;
        for (int k = 0; k < 3; ++k) p[k] = pos_[faces_[f][k]];
        const Vec3 before = (p[1] - p[0]).cross(p[2] - p[0]);
        for (int k = 0; k < 3; ++k) {
          if (faces_[f][k] == w) p[k] = target;
        }
        const Vec3 after = (p[1] - p[0]).cross(p[2] - p[0]);
        const double scale = std::max({(p[1] - p[0]).squaredNorm(), (p[2] - p[0]).squaredNorm(), (p[2] - p[1]).squaredNorm()});
        if (!(before.dot(after) > 0.0) || after.norm() <= 1e-12 * scale) return false;
      }
    }

    for (int f : vertex_faces_[u]) {
      if (face_alive_[f] && has_vertex(f, v)) {
        face_alive_[f] = 0;
        --live_faces_;
      }
    }
    for (int f : vertex_faces_[v]) {
      if (!face_alive_[f]) continue;
      for (int& c : faces_[f]) {
        if (c == v) c = u;
      }
      vertex_faces_[u].push_back(f);
    }
    vertex_faces_[v].clear();
    vertex_alive_[v] = 0;
    --live_vertices_;
    auto& list = vertex_faces_[u];
    list.erase(std::remove_if(list.begin(), list.end(), [&](int f) { return !face_alive_[f]; }), list.end());

    pos_[u] = target;
    quadric_[u] += quadric_[v];
    area_[u] += area_[v];
    ++stamp_[u];
    ++stamp_[v];
    for (int w : neighbors(u)) push(u, w);
    return true;
  }

  std::vector<Vec3> pos_;
  std::vector<Face> faces_;
  std::vector<char> face_alive_;
  std::vector<std::vector<int>> vertex_faces_;
  std::vector<Quadric> quadric_;
  std::vector<double> area_;
  std::vector<std::uint32_t> stamp_;
  std::vector<char> vertex_alive_;
  std::size_t live_vertices_ = 0;
  std::size_t live_faces_ = 0;
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap_;
};

}  // namespace

Mesh simplify(const Mesh& mesh, std::size_t target_faces) {
  if (target_faces < 4) throw NumericError("simplify: target must be at least 4 faces");
  if (target_faces >= mesh.face_count()) return mesh;
  Simplifier s(mesh);
  while (s.live_faces() > target_faces) {
    if (!s.step()) {
      spdlog::warn("simplify: no legal collapse left at {} faces (target {})", s.live_faces(), target_faces);
      break;
    }
  }
  return s.result();
}

Mesh subdivide(const Mesh& mesh) {
  std::vector<Vec3> verts = mesh.vertices();
  std::map<Edge, int> mid;
  auto midpoint = [&](int a, int b) {
    const Edge key{std::min(a, b), std::max(a, b)};
    auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const int id = static_cast<int>(verts.size());
    verts.push_back(0.5 * (verts[a] + verts[b]));
    mid.emplace(key, id);
    return id;
  };
  std::vector<Face> faces;
  faces.reserve(4 * mesh.face_count());
  for (const Face& f : mesh.faces()) {
    const int ab = midpoint(f[0], f[1]);
    const int bc = midpoint(f[1], f[2]);
    const int ca = midpoint(f[2], f[0]);
    faces.push_back({f[0], ab, ca});
    faces.push_back({ab, f[1], bc});
    faces.push_back({ca, bc, f[2]});
    faces.push_back({ab, bc, ca});
  }
  return Mesh(std::move(verts), std::move(faces));
}

Mesh resize(const Mesh& mesh, std::size_t target_faces) {
  if (mesh.empty()) throw NumericError("resize: empty mesh");
  Mesh m = mesh;
  while (m.face_count() < target_faces) m = subdivide(m);
  return simplify(m, target_faces);
}

std::size_t next_face_count(std::size_t faces, double growth, std::size_t max_faces) {
  if (!(growth >= 1.0)) throw NumericError("face growth must be at least 1");
  const auto grown = static_cast<std::size_t>(std::llround(growth * static_cast<double>(faces)));
  return std::min(grown, max_faces);
}

Mesh next_level_mesh(const Mesh& current, double face_growth, std::size_t max_faces, std::size_t leaf_budget) {
  if (!is_watertight(current)) throw MeshError("next_level_mesh: current mesh is not watertight");
  const std::size_t target = next_face_count(current.face_count(), face_growth, max_faces);
  return resize(watertight_remesh(current, leaf_budget), target);
}

}  // namespace p2m::remesh
