#pragma once

#include "p2m/ad/tape.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <memory>

namespace p2m::ad {

namespace detail {

template <class T>
Tape<T>& same_tape(const char* op, Var<T> a, Var<T> b) {
  if (a.tape != b.tape) throw NumericError(std::string(op) + ": operands recorded on different tapes");
  return *a.tape;
}

template <class T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw NumericError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                       shape_string(b.shape()));
  }
}

template <class T>
void require_matrix(const char* op, const Tensor<T>& a) {
  if (a.rank() != 2) throw NumericError(std::string(op) + ": expected a 2-D tensor, got " + shape_string(a.shape()));
}

template <class T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
Eigen::Map<RowMajor<T>> as_matrix(Tensor<T>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
template <class T>
Eigen::Map<const RowMajor<T>> as_matrix(const Tensor<T>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

using Index = std::shared_ptr<const std::vector<int>>;

}  // namespace detail

template <class T>
Var<T> add(Var<T> a, Var<T> b) {
  Tape<T>& tape = detail::same_tape("add", a, b);
  const Tensor<T>& x = a.value();
  const Tensor<T>& y = b.value();
  detail::require_same_shape("add", x, y);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return tape.record(std::move(out), a.requires_grad() || b.requires_grad(), [a = a.id, b = b.id](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    for (std::size_t id : {a, b}) {
      if (!t.requires_grad(id)) continue;
      Tensor<T>& ga = t.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
  });
}

template <class T>
Var<T> sub(Var<T> a, Var<T> b) {
  Tape<T>& tape = detail::same_tape("sub", a, b);
  const Tensor<T>& x = a.value();
  const Tensor<T>& y = b.value();
  detail::require_same_shape("sub", x, y);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return tape.record(std::move(out), a.requires_grad() || b.requires_grad(), [a = a.id, b = b.id](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    if (t.requires_grad(a)) {
      Tensor<T>& ga = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b)) {
      Tensor<T>& gb = t.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

/// Elementwise product. `b` may also be an (N, 1) column broadcast across the columns of `a`.
template <class T>
Var<T> mul(Var<T> a, Var<T> b) {
  Tape<T>& tape = detail::same_tape("mul", a, b);
  const Tensor<T>& x = a.value();
  const Tensor<T>& y = b.value();
  const bool column = x.shape() != y.shape();
  if (column && !(y.size() == x.rows() && y.cols() == 1)) {
    throw NumericError("mul: shape mismatch " + shape_string(x.shape()) + " vs " + shape_string(y.shape()));
  }
  const std::size_t c = x.cols();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[column ? i / c : i];
  return tape.record(std::move(out), a.requires_grad() || b.requires_grad(),
                     [a = a.id, b = b.id, column, c](Tape<T>& t, std::size_t self) {
                       const Tensor<T>& g = t.grad(self);
                       const Tensor<T>& x = t.value(a);
                       const Tensor<T>& y = t.value(b);
                       if (t.requires_grad(a)) {
                         Tensor<T>& ga = t.grad(a);
                         for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[column ? i / c : i];
                       }
                       if (t.requires_grad(b)) {
                         Tensor<T>& gb = t.grad(b);
                         for (std::size_t i = 0; i < g.size(); ++i) gb[column ? i / c : i] += g[i] * x[i];
                       }
                     });
}

template <class T>
Var<T> scale(Var<T> a, T s) {
  const Tensor<T>& x = a.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * s;
  return a.tape->record(std::move(out), a.requires_grad(), [a = a.id, s](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
  });
}

template <class T>
Var<T> add_scalar(Var<T> a, T s) {
  const Tensor<T>& x = a.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + s;
  return a.tape->record(std::move(out), a.requires_grad(), [a = a.id](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

/// x (N, C) plus a per-column bias holding C values.
template <class T>
Var<T> add_bias(Var<T> x, Var<T> bias) {
  Tape<T>& tape = detail::same_tape("add_bias", x, bias);
  const Tensor<T>& xv = x.value();
  const Tensor<T>& bv = bias.value();
  detail::require_matrix("add_bias", xv);
  if (bv.size() != xv.cols()) {
    throw NumericError("add_bias: shape mismatch " + shape_string(xv.shape()) + " vs " + shape_string(bv.shape()));
  }
  const std::size_t c = xv.cols();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] + bv[i % c];
  return tape.record(std::move(out), x.requires_grad() || bias.requires_grad(),
                     [x = x.id, b = bias.id, c](Tape<T>& t, std::size_t self) {
                       const Tensor<T>& g = t.grad(self);
                       if (t.requires_grad(x)) {
                         Tensor<T>& gx = t.grad(x);
                         for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                       }
                       if (t.requires_grad(b)) {
                         Tensor<T>& gb = t.grad(b);
                         for (std::size_t i = 0; i < g.size(); ++i) gb[i % c] += g[i];
                       }
                     });
}

template <class T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>& tape = detail::same_tape("matmul", a, b);
  const Tensor<T>& x = a.value();
  const Tensor<T>& y = b.value();
  detail::require_matrix("matmul", x);
  detail::require_matrix("matmul", y);
  if (x.cols() != y.rows()) {
    throw NumericError("matmul: shape mismatch " + shape_string(x.shape()) + " vs " + shape_string(y.shape()));
  }
  Tensor<T> out({x.rows(), y.cols()});
  detail::as_matrix(out).noalias() = detail::as_matrix(x) * detail::as_matrix(y);
  return tape.record(std::move(out), a.requires_grad() || b.requires_grad(), [a = a.id, b = b.id](Tape<T>& t, std::size_t self) {
    const auto g = detail::as_matrix(t.grad(self));
    if (t.requires_grad(a)) detail::as_matrix(t.grad(a)).noalias() += g * detail::as_matrix(t.value(b)).transpose();
    if (t.requires_grad(b)) detail::as_matrix(t.grad(b)).noalias() += detail::as_matrix(t.value(a)).transpose() * g;
  });
}

/// Concatenates 2-D tensors with equal row counts along the column axis.
template <class T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw NumericError("concat_cols: no operands");
  Tape<T>& tape = *parts[0].tape;
  const std::size_t rows = parts[0].rows();
  std::vector<std::size_t> widths;
  std::vector<std::size_t> ids;
  std::size_t total = 0;
  bool needs = false;
  for (const Var<T>& p : parts) {
    if (p.tape != &tape) throw NumericError("concat_cols: operands recorded on different tapes");
    detail::require_matrix("concat_cols", p.value());
    if (p.rows() != rows) {
      throw NumericError("concat_cols: shape mismatch " + shape_string(parts[0].shape()) + " vs " +
                         shape_string(p.shape()));
    }
    widths.push_back(p.cols());
    ids.push_back(p.id);
    total += p.cols();
    needs = needs || p.requires_grad();
  }
  Tensor<T> out({rows, total});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor<T>& v = parts[k].value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.data() + r * widths[k], widths[k], out.data() + r * total + offset);
    }
    offset += widths[k];
  }
  return tape.record(std::move(out), needs, [ids, widths, rows, total](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.requires_grad(ids[k])) {
        Tensor<T>& gk = t.grad(ids[k]);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* src = g.data() + r * total + offset;
          T* dst = gk.data() + r * widths[k];
          for (std::size_t c = 0; c < widths[k]; ++c) dst[c] += src[c];
        }
      }
      offset += widths[k];
    }
  });
}

/// Row selection: out[i] = x[index[i]]. Backward scatters (adds) into the selected rows.
template <class T>
Var<T> gather_rows(Var<T> x, detail::Index index) {
  const Tensor<T>& xv = x.value();
  const std::size_t c = xv.cols();
  Shape shape = xv.shape();
  if (shape.empty()) throw NumericError("gather_rows: scalar operand");
  shape[0] = index->size();
  Tensor<T> out(shape);
  for (std::size_t i = 0; i < index->size(); ++i) {
    const int r = (*index)[i];
    if (r < 0 || static_cast<std::size_t>(r) >= xv.rows()) {
      throw NumericError("gather_rows: index " + std::to_string(r) + " out of range for " + shape_string(xv.shape()));
    }
    std::copy_n(xv.data() + static_cast<std::size_t>(r) * c, c, out.data() + i * c);
  }
  return x.tape->record(std::move(out), x.requires_grad(), [x = x.id, index, c](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gx = t.grad(x);
    for (std::size_t i = 0; i < index->size(); ++i) {
      T* dst = gx.data() + static_cast<std::size_t>((*index)[i]) * c;
      const T* src = g.data() + i * c;
      for (std::size_t k = 0; k < c; ++k) dst[k] += src[k];
    }
  });
}

template <class T>
Var<T> gather_rows(Var<T> x, std::vector<int> index) {
  return gather_rows(x, std::make_shared<const std::vector<int>>(std::move(index)));
}

/// Row averaging: out[r] = mean of x[i] over all i with index[i] == r. Every output
/// row must receive at least one value.
template <class T>
Var<T> scatter_mean_rows(Var<T> x, detail::Index index, std::size_t out_rows) {
  const Tensor<T>& xv = x.value();
  if (index->size() != xv.rows()) {
    throw NumericError("scatter_mean_rows: " + std::to_string(index->size()) + " indices for " +
                       shape_string(xv.shape()));
  }
  const std::size_t c = xv.cols();
  auto counts = std::make_shared<std::vector<T>>(out_rows, T(0));
  for (int r : *index) {
    if (r < 0 || static_cast<std::size_t>(r) >= out_rows) {
      throw NumericError("scatter_mean_rows: index " + std::to_string(r) + " out of range " + std::to_string(out_rows));
    }
    (*counts)[r] += T(1);
  }
  for (std::size_t r = 0; r < out_rows; ++r) {
    if ((*counts)[r] == T(0)) throw NumericError("scatter_mean_rows: output row " + std::to_string(r) + " receives no values");
  }
  Shape shape = xv.shape();
  shape[0] = out_rows;
  Tensor<T> out(shape);
  for (std::size_t i = 0; i < index->size(); ++i) {
    T* dst = out.data() + static_cast<std::size_t>((*index)[i]) * c;
    const T* src = xv.data() + i * c;
    for (std::size_t k = 0; k < c; ++k) dst[k] += src[k];
  }
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t k = 0; k < c; ++k) out.data()[r * c + k] /= (*counts)[r];
  }
  return x.tape->record(std::move(out), x.requires_grad(), [x = x.id, index, counts, c](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& gx = t.grad(x);
    for (std::size_t i = 0; i < index->size(); ++i) {
      const std::size_t r = static_cast<std::size_t>((*index)[i]);
      const T w = T(1) / (*counts)[r];
      for (std::size_t k = 0; k < c; ++k) gx.data()[i * c + k] += g.data()[r * c + k] * w;
    }
  });
}

template <class T>
Var<T> scatter_mean_rows(Var<T> x, std::vector<int> index, std::size_t out_rows) {
  return scatter_mean_rows(x, std::make_shared<const std::vector<int>>(std::move(index)), out_rows);
}

/// Elementwise maximum; ties send the gradient to the first operand.
template <class T>
Var<T> maximum(Var<T> a, Var<T> b) {
  Tape<T>& tape = detail::same_tape("maximum", a, b);
  const Tensor<T>& x = a.value();
  const Tensor<T>& y = b.value();
  detail::require_same_shape("maximum", x, y);
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] >= y[i] ? x[i] : y[i];
  return tape.record(std::move(out), a.requires_grad() || b.requires_grad(), [a = a.id, b = b.id](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& x = t.value(a);
    const Tensor<T>& y = t.value(b);
    if (t.requires_grad(a)) {
      Tensor<T>& ga = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) if (x[i] >= y[i]) ga[i] += g[i];
    }
    if (t.requires_grad(b)) {
      Tensor<T>& gb = t.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) if (x[i] < y[i]) gb[i] += g[i];
    }
  });
}

template <class T>
Var<T> abs(Var<T> a) {
  const Tensor<T>& x = a.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(x[i]);
  return a.tape->record(std::move(out), a.requires_grad(), [a = a.id](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& x = t.value(a);
    Tensor<T>& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += x[i] > T(0) ? g[i] : (x[i] < T(0) ? -g[i] : T(0));
  });
}

template <class T>
Var<T> leaky_relu(Var<T> a, T slope) {
  const Tensor<T>& x = a.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > T(0) ? x[i] : slope * x[i];
  return a.tape->record(std::move(out), a.requires_grad(), [a = a.id, slope](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& x = t.value(a);
    Tensor<T>& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += x[i] > T(0) ? g[i] : slope * g[i];
  });
}

template <class T>
Var<T> tanh(Var<T> a) {
  const Tensor<T>& x = a.value();
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x[i]);
  return a.tape->record(std::move(out), a.requires_grad(), [a = a.id](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& y = t.value(self);
    Tensor<T>& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T(1) - y[i] * y[i]);
  });
}

/// Group normalization of x (N, C): channels are split into `groups` contiguous
/// groups and each group is standardized over all N rows, then scaled by gamma and
/// shifted by beta (both C values). Statistics are accumulated in double.
template <class T>
Var<T> group_norm(Var<T> x, Var<T> gamma, Var<T> beta, std::size_t groups, double eps = 1e-5) {
  Tape<T>& tape = detail::same_tape("group_norm", x, gamma);
  detail::same_tape("group_norm", x, beta);
  const Tensor<T>& xv = x.value();
  detail::require_matrix("group_norm", xv);
  const std::size_t n = xv.rows();
  const std::size_t c = xv.cols();
  if (groups == 0 || c % groups != 0) {
    throw NumericError("group_norm: " + std::to_string(c) + " channels not divisible into " + std::to_string(groups) +
                       " groups");
  }
  if (gamma.value().size() != c || beta.value().size() != c) {
    throw NumericError("group_norm: shape mismatch " + shape_string(xv.shape()) + " vs " +
                       shape_string(gamma.value().shape()));
  }
  const std::size_t gs = c / groups;
  const double count = static_cast<double>(n * gs);
  std::vector<double> mean(groups, 0.0), var(groups, 0.0);
  const T* xp = xv.data();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t grp = 0; grp < groups; ++grp) {
      const T* row = xp + r * c + grp * gs;
      double s = 0.0;
      for (std::size_t j = 0; j < gs; ++j) s += row[j];
      mean[grp] += s;
    }
  for (double& m : mean) m /= count;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t grp = 0; grp < groups; ++grp) {
      const T* row = xp + r * c + grp * gs;
      double s = 0.0;
      for (std::size_t j = 0; j < gs; ++j) {
        const double d = row[j] - mean[grp];
        s += d * d;
      }
      var[grp] += s;
    }
  auto inv_std = std::make_shared<std::vector<double>>(groups);
  for (std::size_t g = 0; g < groups; ++g) (*inv_std)[g] = 1.0 / std::sqrt(var[g] / count + eps);

  auto normalized = std::make_shared<Tensor<T>>(xv.shape());
  const T* gp = gamma.value().data();
  const T* bp = beta.value().data();
  Tensor<T> out(xv.shape());
  T* np = normalized->data();
  T* op = out.data();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t grp = 0; grp < groups; ++grp) {
      const T m = static_cast<T>(mean[grp]);
      const T is = static_cast<T>((*inv_std)[grp]);
      const std::size_t base = r * c + grp * gs;
      for (std::size_t j = 0; j < gs; ++j) {
        const std::size_t i = base + j;
        const T h = (xp[i] - m) * is;
        np[i] = h;
        op[i] = h * gp[grp * gs + j] + bp[grp * gs + j];
      }
    }

  const bool needs = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  return tape.record(std::move(out), needs,
                     [x = x.id, gm = gamma.id, bt = beta.id, groups, gs, n, c, count, inv_std, normalized](Tape<T>& t, std::size_t self) {
                       const T* g = t.grad(self).data();
                       const T* gv = t.value(gm).data();
                       const T* xh = normalized->data();
                       if (t.requires_grad(gm)) {
                         T* gg = t.grad(gm).data();
                         for (std::size_t r = 0; r < n; ++r)
                           for (std::size_t k = 0; k < c; ++k) gg[k] += g[r * c + k] * xh[r * c + k];
                       }
                       if (t.requires_grad(bt)) {
                         T* gb = t.grad(bt).data();
                         for (std::size_t r = 0; r < n; ++r)
                           for (std::size_t k = 0; k < c; ++k) gb[k] += g[r * c + k];
                       }
                       if (!t.requires_grad(x)) return;
                       T* gx = t.grad(x).data();
                       std::vector<double> sum_d(groups, 0.0), sum_dx(groups, 0.0);
                       for (std::size_t r = 0; r < n; ++r)
                         for (std::size_t grp = 0; grp < groups; ++grp) {
                           const std::size_t base = r * c + grp * gs;
                           double sd = 0.0, sdx = 0.0;
                           for (std::size_t j = 0; j < gs; ++j) {
                             const double d = static_cast<double>(g[base + j]) * gv[grp * gs + j];
                             sd += d;
                             sdx += d * xh[base + j];
                           }
                           sum_d[grp] += sd;
                           sum_dx[grp] += sdx;
                         }
                       for (std::size_t grp = 0; grp < groups; ++grp) {
                         sum_d[grp] /= count;
                         sum_dx[grp] /= count;
                       }
                       for (std::size_t r = 0; r < n; ++r)
                         for (std::size_t grp = 0; grp < groups; ++grp) {
                           const T is = static_cast<T>((*inv_std)[grp]);
                           const T md = static_cast<T>(sum_d[grp]);
                           const T mdx = static_cast<T>(sum_dx[grp]);
                           const std::size_t base = r * c + grp * gs;
                           for (std::size_t j = 0; j < gs; ++j) {
                             const std::size_t i = base + j;
                             gx[i] += is * (g[i] * gv[grp * gs + j] - md - xh[i] * mdx);
                           }
                         }
                     });
}

template <class T>
Var<T> sum(Var<T> a) {
  const Tensor<T>& x = a.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i];
  return a.tape->record(Tensor<T>::scalar(static_cast<T>(acc)), a.requires_grad(), [a = a.id](Tape<T>& t, std::size_t self) {
    const T g = t.grad(self)[0];
    Tensor<T>& ga = t.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

template <class T>
Var<T> mean(Var<T> a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw NumericError("mean: empty tensor");
  return scale(sum(a), T(1) / static_cast<T>(n));
}

/// Per-row sum: (N, C) -> (N, 1).
template <class T>
Var<T> sum_cols(Var<T> a) {
  const Tensor<T>& x = a.value();
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  Tensor<T> out({n, 1});
  for (std::size_t r = 0; r < n; ++r) {
    T acc = T(0);
    for (std::size_t k = 0; k < c; ++k) acc += x[r * c + k];
    out[r] = acc;
  }
  return a.tape->record(std::move(out), a.requires_grad(), [a = a.id, c](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& ga = t.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i / c];
  });
}

/// Euclidean norm of every row: (N, C) -> (N, 1). The gradient at a zero row is zero.
template <class T>
Var<T> norm_rows(Var<T> a) {
  const Tensor<T>& x = a.value();
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  Tensor<T> out({n, 1});
  for (std::size_t r = 0; r < n; ++r) {
    T acc = T(0);
    for (std::size_t k = 0; k < c; ++k) acc += x[r * c + k] * x[r * c + k];
    out[r] = std::sqrt(acc);
  }
  return a.tape->record(std::move(out), a.requires_grad(), [a = a.id, c](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& x = t.value(a);
    const Tensor<T>& y = t.value(self);
    Tensor<T>& ga = t.grad(a);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const T len = y[i / c];
      if (len > T(0)) ga[i] += g[i / c] * x[i] / len;
    }
  });
}

/// Row-wise cross product of two (N, 3) tensors.
template <class T>
Var<T> cross_rows(Var<T> a, Var<T> b) {
  Tape<T>& tape = detail::same_tape("cross_rows", a, b);
  const Tensor<T>& x = a.value();
  const Tensor<T>& y = b.value();
  detail::require_same_shape("cross_rows", x, y);
  if (x.cols() != 3) throw NumericError("cross_rows: expected (N, 3), got " + shape_string(x.shape()));
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const T* u = x.data() + 3 * r;
    const T* v = y.data() + 3 * r;
    T* o = out.data() + 3 * r;
    o[0] = u[1] * v[2] - u[2] * v[1];
    o[1] = u[2] * v[0] - u[0] * v[2];
    o[2] = u[0] * v[1] - u[1] * v[0];
  }
  return tape.record(std::move(out), a.requires_grad() || b.requires_grad(), [a = a.id, b = b.id](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& x = t.value(a);
    const Tensor<T>& y = t.value(b);
    const std::size_t n = g.rows();
    // d(u x v) = du x v + u x dv; adjoints: gu = v x g, gv = g x u.
    if (t.requires_grad(a)) {
      Tensor<T>& ga = t.grad(a);
      for (std::size_t r = 0; r < n; ++r) {
        const T* v = y.data() + 3 * r;
        const T* w = g.data() + 3 * r;
        T* o = ga.data() + 3 * r;
        o[0] += v[1] * w[2] - v[2] * w[1];
        o[1] += v[2] * w[0] - v[0] * w[2];
        o[2] += v[0] * w[1] - v[1] * w[0];
      }
    }
    if (t.requires_grad(b)) {
      Tensor<T>& gb = t.grad(b);
      for (std::size_t r = 0; r < n; ++r) {
        const T* u = x.data() + 3 * r;
        const T* w = g.data() + 3 * r;
        T* o = gb.data() + 3 * r;
        o[0] += w[1] * u[2] - w[2] * u[1];
        o[1] += w[2] * u[0] - w[0] * u[2];
        o[2] += w[0] * u[1] - w[1] * u[0];
      }
    }
  });
}

/// Scales every row to unit length; zero rows stay zero.
template <class T>
Var<T> normalize_rows(Var<T> a) {
  const Tensor<T>& x = a.value();
  const std::size_t n = x.rows();
  const std::size_t c = x.cols();
  auto lengths = std::make_shared<std::vector<T>>(n);
  Tensor<T> out(x.shape());
  for (std::size_t r = 0; r < n; ++r) {
    T acc = T(0);
    for (std::size_t k = 0; k < c; ++k) acc += x[r * c + k] * x[r * c + k];
    const T len = std::sqrt(acc);
    (*lengths)[r] = len;
    for (std::size_t k = 0; k < c; ++k) out[r * c + k] = len > T(0) ? x[r * c + k] / len : T(0);
  }
  return a.tape->record(std::move(out), a.requires_grad(), [a = a.id, c, lengths](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    const Tensor<T>& y = t.value(self);
    Tensor<T>& ga = t.grad(a);
    for (std::size_t r = 0; r < lengths->size(); ++r) {
      const T len = (*lengths)[r];
      if (!(len > T(0))) continue;
      T dot = T(0);
      for (std::size_t k = 0; k < c; ++k) dot += g[r * c + k] * y[r * c + k];
      for (std::size_t k = 0; k < c; ++k) ga[r * c + k] += (g[r * c + k] - dot * y[r * c + k]) / len;
    }
  });
}

template <class T>
Var<T> reshape(Var<T> a, Shape shape) {
  Tensor<T> out = a.value().reshaped(std::move(shape));
  return a.tape->record(std::move(out), a.requires_grad(), [a = a.id](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    Tensor<T>& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

}  // namespace p2m::ad
