#pragma once

// Central finite-difference check of reverse-mode gradients in double precision.

#include "p2m/ad/tape.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace gradcheck {

using p2m::ad::Tape;
using p2m::ad::Tensor;
using p2m::ad::Var;

using Fn = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

struct Result {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst;
};

inline double evaluate(const Fn& f, const std::vector<Tensor<double>>& inputs) {
  Tape<double> tape;
  tape.set_grad_enabled(false);
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(tape.variable(t));
  return f(tape, vars).value().item();
}

/// Compares analytic and numeric derivatives on up to `max_coords` coordinates per
/// input (all of them when the input is smaller). Relative error is
/// |a - n| / max(|a|, |n|, floor).
inline Result check(const Fn& f, std::vector<Tensor<double>> inputs, std::size_t max_coords = 100,
                    double step = 1e-5, double floor = 1e-3, std::uint64_t seed = 1) {
  Tape<double> tape;
  std::vector<Var<double>> vars;
  for (const auto& t : inputs) vars.push_back(tape.variable(t));
  const Var<double> out = f(tape, vars);
  tape.backward(out);
  std::vector<Tensor<double>> analytic;
  for (const auto& v : vars) analytic.push_back(tape.gradient(v));

  Result res;
  std::mt19937_64 pick(seed);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<std::size_t> coords(inputs[k].size());
    std::iota(coords.begin(), coords.end(), 0);
    std::shuffle(coords.begin(), coords.end(), pick);
    if (coords.size() > max_coords) coords.resize(max_coords);
    for (std::size_t i : coords) {
      const double x0 = inputs[k][i];
      inputs[k][i] = x0 + step;
      const double fp = evaluate(f, inputs);
      inputs[k][i] = x0 - step;
      const double fm = evaluate(f, inputs);
      inputs[k][i] = x0;
      const double numeric = (fp - fm) / (2.0 * step);
      const double a = analytic[k][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++res.coordinates;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        std::ostringstream msg;
        msg << "input " << k << " coord " << i << ": analytic " << a << " numeric " << numeric;
        res.worst = msg.str();
      }
    }
  }
  return res;
}

}  // namespace gradcheck
