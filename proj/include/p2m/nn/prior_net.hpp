#pragma once

#include "p2m/nn/edge_conv.hpp"
#include "p2m/nn/pool.hpp"

namespace p2m::nn {

/// Number of code channels per edge (two 3-D displacements).
constexpr std::size_t kCodeChannels = 6;

struct PriorNetConfig {
  std::vector<std::size_t> channels{32, 32, 32, 32, 64, 64};  // one entry per encoder stage
  double pool_fraction = 0.2;  // share of edges removed after every stage but the last
  int residual_blocks = 2;
  std::uint64_t seed = 0;
};

/// The per-edge random input: (E, 6) values drawn uniformly from [0, 1).
template <std::floating_point T>
struct EdgeCode {
  Tensor<T> values;

  EdgeCode() = default;
  EdgeCode(std::size_t edge_count, Rng& rng) : values(ad::uniform_tensor<T>({edge_count, kCodeChannels}, rng)) {}
  std::size_t edge_count() const { return values.rows(); }
};

/// U-shaped edge-convolution network. Encoder stages convolve then pool; decoder
/// stages unpool, concatenate the matching encoder output and convolve; a
/// zero-initialized head regresses 6 values per edge.
template <std::floating_point T>
class PriorNet {
 public:
  explicit PriorNet(PriorNetConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.channels.empty()) throw NumericError("PriorNet: at least one stage is required");
    if (!(cfg_.pool_fraction >= 0.0 && cfg_.pool_fraction < 1.0)) throw NumericError("PriorNet: pool fraction must be in [0, 1)");
    Rng rng(cfg_.seed);
    std::size_t in = kCodeChannels;
    for (std::size_t s = 0; s < cfg_.channels.size(); ++s) {
      encoder_.emplace_back("enc" + std::to_string(s), in, cfg_.channels[s], cfg_.residual_blocks, rng);
      in = cfg_.channels[s];
    }
    for (std::size_t s = cfg_.channels.size() - 1; s-- > 0;) {
      decoder_.emplace_back("dec" + std::to_string(s), in + cfg_.channels[s], cfg_.channels[s], cfg_.residual_blocks, rng);
      in = cfg_.channels[s];
    }
    head_ = EdgeConv<T>("head", in, kCodeChannels, rng, /*zero=*/true);
  }

  PriorNet(const PriorNet&) = delete;
  PriorNet& operator=(const PriorNet&) = delete;

  const PriorNetConfig& config() const { return cfg_; }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for (auto& b : encoder_) b.collect(out);
    for (auto& b : decoder_) b.collect(out);
    head_.collect(out);
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (Parameter<T>* p : parameters()) n += p->value().size();
    return n;
  }

  /// Full U-pass; returns (E, 6) per-edge displacement pairs.
  Var<T> forward(Tape<T>& tape, const Tensor<T>& code, const Mesh& mesh) {
    if (code.rows() != mesh.edge_count() || code.cols() != kCodeChannels) {
      throw NumericError("PriorNet: code " + ad::shape_string(code.shape()) + " for " + std::to_string(mesh.edge_count()) +
                         " edges");
    }
    std::vector<Var<T>> skips;
    std::vector<PoolRecord> records;
    records.reserve(encoder_.size());  // `current` points into this vector
    std::vector<Neighbors> neighbors{share_neighbors(mesh)};
    const Mesh* current = &mesh;
    Var<T> h = tape.constant(code);
    for (std::size_t s = 0; s < encoder_.size(); ++s) {
      h = encoder_[s](tape, h, neighbors.back());
      if (s + 1 == encoder_.size()) break;
      skips.push_back(h);
      const auto target = static_cast<std::size_t>(std::llround((1.0 - cfg_.pool_fraction) * current->edge_count()));
      auto [pooled, rec] = pool(h, *current, target);
      h = pooled;
      records.push_back(std::move(rec));
      current = &records.back().coarse;
      neighbors.push_back(records.back().identity() ? neighbors.back() : share_neighbors(*current));
    }
    for (std::size_t d = 0; d < decoder_.size(); ++d) {
      const std::size_t s = encoder_.size() - 2 - d;
      h = unpool_features(h, records[s]);
      h = decoder_[d](tape, ad::concat_cols<T>({h, skips[s]}), neighbors[s]);
    }
    Var<T> out = head_(tape, h, neighbors.front());
    if (!out.value().all_finite()) throw NumericError("non-finite activation in layer 'head'");
    return out;
  }

 private:
  PriorNetConfig cfg_;
  std::vector<ConvBlock<T>> encoder_;
  std::vector<ConvBlock<T>> decoder_;
  EdgeConv<T> head_;
};

/// Per-vertex displacement: the mean over every edge slot that references the vertex.
/// Column block 0..2 of edge e belongs to its lower vertex, 3..5 to its higher vertex.
template <std::floating_point T>
Var<T> build_delta_v(Var<T> delta_e, const Mesh& mesh) {
  if (delta_e.rows() != mesh.edge_count() || delta_e.value().size() != mesh.edge_count() * kCodeChannels) {
    throw NumericError("build_delta_v: displacements " + ad::shape_string(delta_e.shape()) + " for " +
                       std::to_string(mesh.edge_count()) + " edges");
  }
  std::vector<int> slot_vertex;
  slot_vertex.reserve(2 * mesh.edge_count());
  std::vector<char> touched(mesh.vertex_count(), 0);
  for (const Edge& e : mesh.edges()) {
    slot_vertex.push_back(e[0]);
    slot_vertex.push_back(e[1]);
    touched[e[0]] = touched[e[1]] = 1;
  }
  for (std::size_t v = 0; v < touched.size(); ++v) {
    if (!touched[v]) throw MeshError("build_delta_v: vertex " + std::to_string(v) + " has no incident edge");
  }
  Var<T> slots = ad::reshape(delta_e, {2 * mesh.edge_count(), 3});
  return ad::scatter_mean_rows(slots, std::move(slot_vertex), mesh.vertex_count());
}

/// Vertex positions as a (V, 3) tensor.
template <std::floating_point T>
Tensor<T> vertex_tensor(const Mesh& mesh) {
  Tensor<T> t({mesh.vertex_count(), 3});
  for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
    for (int k = 0; k < 3; ++k) t.at(v, k) = static_cast<T>(mesh.vertices()[v][k]);
  return t;
}

template <std::floating_point T>
std::vector<Vec3> to_points(const Tensor<T>& t) {
  std::vector<Vec3> out(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) out[i] = Vec3(t.at(i, 0), t.at(i, 1), t.at(i, 2));
  return out;
}

/// Shifted copy of the mesh; connectivity is shared unchanged.
template <std::floating_point T>
Mesh apply_displacements(const Mesh& mesh, const Tensor<T>& delta_v) {
  if (delta_v.rows() != mesh.vertex_count() || delta_v.cols() != 3) {
    throw NumericError("apply_displacements: " + ad::shape_string(delta_v.shape()) + " for " +
                       std::to_string(mesh.vertex_count()) + " vertices");
  }
  std::vector<Vec3> v = mesh.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += Vec3(delta_v.at(i, 0), delta_v.at(i, 1), delta_v.at(i, 2));
  return mesh.with_vertices(std::move(v));
}

}  // namespace p2m::nn
