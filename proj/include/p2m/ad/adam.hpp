#pragma once

#include "p2m/ad/tape.hpp"

namespace p2m::ad {

struct AdamConfig {
  double lr = 1.1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive-moment optimizer over a fixed list of parameters.
template <std::floating_point T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamConfig cfg = {}) : params_(std::move(params)), cfg_(cfg) {
    for (Parameter<T>* p : params_) {
      m_.emplace_back(p->value().shape());
      v_.emplace_back(p->value().shape());
    }
  }

  /// One update from the accumulated Parameter::grad() values. Gradients are left
  /// in place; call zero_grad() before the next accumulation.
  void step() {
    for (Parameter<T>* p : params_) {
      if (!p->grad().all_finite()) throw NumericError("non-finite gradient in parameter '" + p->name() + "'");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Tensor<T>& w = params_[k]->value();
      const Tensor<T>& g = params_[k]->grad();
      Tensor<T>& m = m_[k];
      Tensor<T>& v = v_[k];
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = g[i];
        const double mi = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
        const double vi = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        w[i] = static_cast<T>(w[i] - cfg_.lr * (mi / c1) / (std::sqrt(vi / c2) + cfg_.eps));
      }
    }
  }

  void zero_grad() {
    for (Parameter<T>* p : params_) p->zero_grad();
  }

  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  const Tensor<T>& first_moment(std::size_t k) const { return m_.at(k); }
  const Tensor<T>& second_moment(std::size_t k) const { return v_.at(k); }

 private:
  std::vector<Parameter<T>*> params_;
  AdamConfig cfg_;
  std::vector<Tensor<T>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace p2m::ad
