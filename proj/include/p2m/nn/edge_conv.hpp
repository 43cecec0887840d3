#pragma once

#include "p2m/ad/ops.hpp"
#include "p2m/mesh.hpp"

#include <memory>

namespace p2m::nn {

using ad::Parameter;
using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

using Neighbors = std::shared_ptr<const std::vector<std::array<int, 4>>>;

inline Neighbors share_neighbors(const Mesh& mesh) {
  return std::make_shared<const std::vector<std::array<int, 4>>>(mesh.edge_neighbors());
}

/// Order-invariant neighborhood of every edge: for features x (E, C) and neighbor
/// stencil (a, b, c, d) returns (E, 5C) rows [x_e, |x_a - x_c|, x_a + x_c, |x_b - x_d|, x_b + x_d].
template <std::floating_point T>
Var<T> edge_stencil(Var<T> x, Neighbors nb) {
  const Tensor<T>& xv = x.value();
  if (xv.rank() != 2 || xv.rows() != nb->size()) {
    throw NumericError("edge_stencil: features " + ad::shape_string(xv.shape()) + " for " + std::to_string(nb->size()) +
                       " edges");
  }
  const std::size_t e_count = xv.rows();
  const std::size_t c = xv.cols();
  Tensor<T> out({e_count, 5 * c});
  for (std::size_t e = 0; e < e_count; ++e) {
    const auto& n = (*nb)[e];
    const T* xe = xv.data() + e * c;
    const T* xa = xv.data() + static_cast<std::size_t>(n[0]) * c;
    const T* xb = xv.data() + static_cast<std::size_t>(n[1]) * c;
    const T* xc = xv.data() + static_cast<std::size_t>(n[2]) * c;
    const T* xd = xv.data() + static_cast<std::size_t>(n[3]) * c;
    T* o = out.data() + e * 5 * c;
    for (std::size_t k = 0; k < c; ++k) {
      o[k] = xe[k];
      o[c + k] = std::abs(xa[k] - xc[k]);
      o[2 * c + k] = xa[k] + xc[k];
      o[3 * c + k] = std::abs(xb[k] - xd[k]);
      o[4 * c + k] = xb[k] + xd[k];
    }
  }
  return x.tape->record(std::move(out), x.requires_grad(), [x = x.id, nb, c](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& xv = t.value(x);
    Tensor<T>& gx = t.grad(x);
    auto sign = [](T v) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); };
    for (std::size_t e = 0; e < nb->size(); ++e) {
      const auto& n = (*nb)[e];
      const std::size_t ia = static_cast<std::size_t>(n[0]) * c, ib = static_cast<std::size_t>(n[1]) * c;
      const std::size_t ic = static_cast<std::size_t>(n[2]) * c, id = static_cast<std::size_t>(n[3]) * c;
      const T* ge = g.data() + e * 5 * c;
      T* out_e = gx.data() + e * c;
      for (std::size_t k = 0; k < c; ++k) {
        out_e[k] += ge[k];
        const T s1 = sign(xv[ia + k] - xv[ic + k]) * ge[c + k];
        gx[ia + k] += s1 + ge[2 * c + k];
        gx[ic + k] += -s1 + ge[2 * c + k];
        const T s2 = sign(xv[ib + k] - xv[id + k]) * ge[3 * c + k];
        gx[ib + k] += s2 + ge[4 * c + k];
        gx[id + k] += -s2 + ge[4 * c + k];
      }
    }
  });
}

/// Learned linear map over the edge stencil.
template <std::floating_point T>
struct EdgeConv {
  Parameter<T> weight;  // (5 * in, out)
  Parameter<T> bias;    // (out)
  std::size_t in = 0, out = 0;

  EdgeConv() = default;
  EdgeConv(const std::string& name, std::size_t in_channels, std::size_t out_channels, Rng& rng, bool zero = false)
      : weight(name + ".weight", Tensor<T>({5 * in_channels, out_channels})),
        bias(name + ".bias", Tensor<T>({out_channels})),
        in(in_channels),
        out(out_channels) {
    if (!zero) {
      // He-style scaling for leaky rectifiers.
      const double std_dev = std::sqrt(2.0 / static_cast<double>(5 * in_channels));
      for (std::size_t i = 0; i < weight.value().size(); ++i) weight.value()[i] = static_cast<T>(std_dev * rng.normal());
    }
  }

  Var<T> operator()(Tape<T>& tape, Var<T> x, const Neighbors& nb) {
    if (x.cols() != in) {
      throw NumericError(weight.name() + ": expected " + std::to_string(in) + " input channels, got " +
                         std::to_string(x.cols()));
    }
    return ad::add_bias(ad::matmul(edge_stencil(x, nb), tape.parameter(weight)), tape.parameter(bias));
  }

  void collect(std::vector<Parameter<T>*>& params) {
    params.push_back(&weight);
    params.push_back(&bias);
  }
};

/// Channels per normalization group.
inline std::size_t norm_groups(std::size_t channels) {
  const std::size_t per_group = std::min<std::size_t>(32, channels);
  return channels / per_group;
}

/// Edge convolution followed by group normalization; the activation is applied by
/// the caller so residual sums can be inserted before it.
template <std::floating_point T>
struct NormConv {
  EdgeConv<T> conv;
  Parameter<T> gamma, beta;

  NormConv() = default;
  NormConv(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
      : conv(name + ".conv", in, out, rng),
        gamma(name + ".norm.gamma", Tensor<T>({out}, T(1))),
        beta(name + ".norm.beta", Tensor<T>({out})) {
    if (out % std::min<std::size_t>(32, out) != 0) {
      throw NumericError(name + ": " + std::to_string(out) + " channels do not split into groups of 32");
    }
  }

  Var<T> operator()(Tape<T>& tape, Var<T> x, const Neighbors& nb) {
    return ad::group_norm(conv(tape, x, nb), tape.parameter(gamma), tape.parameter(beta), norm_groups(conv.out));
  }

  void collect(std::vector<Parameter<T>*>& params) {
    conv.collect(params);
    params.push_back(&gamma);
    params.push_back(&beta);
  }
};

constexpr double kLeakySlope = 0.01;

/// conv-norm-activation followed by `residual` skip-added conv-norm sub-blocks.
template <std::floating_point T>
struct ConvBlock {
  std::string name;
  NormConv<T> first;
  std::vector<NormConv<T>> residual;

  ConvBlock() = default;
  ConvBlock(std::string block_name, std::size_t in, std::size_t out, int residual_count, Rng& rng)
      : name(std::move(block_name)), first(name + ".in", in, out, rng) {
    for (int r = 0; r < residual_count; ++r) residual.emplace_back(name + ".res" + std::to_string(r), out, out, rng);
  }

  Var<T> operator()(Tape<T>& tape, Var<T> x, const Neighbors& nb) {
    const T slope = static_cast<T>(kLeakySlope);
    Var<T> h = ad::leaky_relu(first(tape, x, nb), slope);
    for (NormConv<T>& r : residual) h = ad::leaky_relu(ad::add(h, r(tape, h, nb)), slope);
    if (!h.value().all_finite()) throw NumericError("non-finite activation in layer '" + name + "'");
    return h;
  }

  void collect(std::vector<Parameter<T>*>& params) {
    first.collect(params);
    for (NormConv<T>& r : residual) r.collect(params);
  }
};

}  // namespace p2m::nn
