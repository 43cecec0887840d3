#pragma once

#include "p2m/ad/ops.hpp"
#include "p2m/mesh.hpp"

#include <memory>
#include <span>

namespace p2m::nn {

/// Result of coarsening a mesh by edge collapses. Every pre-collapse edge maps to
/// exactly one edge of the coarse mesh.
struct PoolRecord {
  std::shared_ptr<const std::vector<int>> parent;  // old edge -> coarse edge
  std::size_t old_count = 0;
  std::size_t new_count = 0;
  Mesh coarse;  // connectivity after collapsing (vertex positions are not meaningful)

  bool identity() const { return old_count == new_count; }
};

/// Collapses edges in ascending priority order (ties by edge index), skipping those
/// that fail the link condition, until `target_edges` remain or no legal collapse is
/// left. In each collapse the edge and the two edges of one incident face merge into
/// one coarse edge, and the two edges of the other face merge into another.
PoolRecord pool_edges(const Mesh& mesh, std::span<const double> priorities, std::size_t target_edges);

/// Average of the features of all edges merged into each coarse edge.
template <std::floating_point T>
ad::Var<T> pool_features(ad::Var<T> features, const PoolRecord& record) {
  if (features.rows() != record.old_count) {
    throw NumericError("pool: features have " + std::to_string(features.rows()) + " rows, record expects " +
                       std::to_string(record.old_count));
  }
  if (record.identity()) return features;
  return ad::scatter_mean_rows(features, record.parent, record.new_count);
}

/// Every fine edge receives the features of the coarse edge it merged into.
template <std::floating_point T>
ad::Var<T> unpool_features(ad::Var<T> features, const PoolRecord& record) {
  if (features.rows() != record.new_count) {
    throw NumericError("unpool: features have " + std::to_string(features.rows()) + " rows, record expects " +
                       std::to_string(record.new_count));
  }
  if (record.identity()) return features;
  return ad::gather_rows(features, record.parent);
}

/// Pools by feature magnitude: priorities are the Euclidean norms of the feature rows.
template <std::floating_point T>
std::pair<ad::Var<T>, PoolRecord> pool(ad::Var<T> features, const Mesh& mesh, std::size_t target_edges) {
  const ad::Tensor<T>& v = features.value();
  std::vector<double> priority(v.rows());
  for (std::size_t e = 0; e < v.rows(); ++e) {
    double s = 0.0;
    for (std::size_t k = 0; k < v.cols(); ++k) s += static_cast<double>(v.at(e, k)) * v.at(e, k);
    priority[e] = std::sqrt(s);
  }
  PoolRecord rec = pool_edges(mesh, priority, target_edges);
  ad::Var<T> pooled = pool_features(features, rec);
  return {pooled, std::move(rec)};
}

}  // namespace p2m::nn
