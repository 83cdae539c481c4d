// Copyright 2026 sefpnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "sefpnet/autograd.hpp"

namespace sefpnet {

namespace detail {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using CMatMap = Eigen::Map<const RowMat>;

constexpr int kMaxRank = 4;

// Right-aligned numpy-style broadcast shape.
inline Shape broadcast_shapes(const Shape& a, const Shape& b) {
  size_t r = std::max(a.size(), b.size());
  Shape out(r, 1);
  for (size_t i = 0; i < r; ++i) {
    int64_t da = i < r - a.size() ? 1 : a[i - (r - a.size())];
    int64_t db = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (da != db && da != 1 && db != 1)
      throw ShapeError("broadcast: incompatible shapes " + shape_str(a) +
                       " vs " + shape_str(b));
    out[i] = std::max(da, db);
  }
  return out;
}

// Strides of `s` right-aligned into rank r, 0 where broadcast.
inline std::array<int64_t, kMaxRank> bcast_strides(const Shape& s, size_t r) {
  std::array<int64_t, kMaxRank> st{};
  std::vector<int64_t> full(r, 1);
  for (size_t i = 0; i < s.size(); ++i) full[r - s.size() + i] = s[i];
  int64_t acc = 1;
  std::vector<int64_t> contig(r);
  for (size_t i = r; i-- > 0;) {
    contig[i] = acc;
    acc *= full[i];
  }
  for (size_t i = 0; i < kMaxRank; ++i) st[i] = 0;
  for (size_t i = 0; i < r; ++i)
    st[kMaxRank - r + i] = full[i] == 1 ? 0 : contig[i];
  return st;
}

inline std::array<int64_t, kMaxRank> padded_dims(const Shape& s) {
  std::array<int64_t, kMaxRank> d{1, 1, 1, 1};
  for (size_t i = 0; i < s.size(); ++i) d[kMaxRank - s.size() + i] = s[i];
  return d;
}

// Sums `g` down to `target` shape (inverse of broadcasting).
inline Tensor reduce_to_shape(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  Tensor out = Tensor::zeros(target);
  auto od = padded_dims(g.shape());
  auto ts = bcast_strides(target, g.shape().size());
  const double* gp = g.data();
  double* op = out.data();
  int64_t idx = 0;
  for (int64_t i0 = 0; i0 < od[0]; ++i0)
    for (int64_t i1 = 0; i1 < od[1]; ++i1)
      for (int64_t i2 = 0; i2 < od[2]; ++i2)
        for (int64_t i3 = 0; i3 < od[3]; ++i3)
          op[i0 * ts[0] + i1 * ts[1] + i2 * ts[2] + i3 * ts[3]] += gp[idx++];
  return out;
}

template <class F>
inline Tensor binary_map(const Tensor& a, const Tensor& b, F f) {
  if (a.same_shape(b)) {
    Tensor out(a.shape());
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    for (int64_t i = 0; i < a.numel(); ++i) po[i] = f(pa[i], pb[i]);
    return out;
  }
  Shape os = broadcast_shapes(a.shape(), b.shape());
  if (os.size() > kMaxRank) throw ShapeError("broadcast: rank > 4");
  Tensor out(os);
  auto od = padded_dims(os);
  auto sa = bcast_strides(a.shape(), os.size());
  auto sb = bcast_strides(b.shape(), os.size());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  int64_t idx = 0;
  for (int64_t i0 = 0; i0 < od[0]; ++i0)
    for (int64_t i1 = 0; i1 < od[1]; ++i1)
      for (int64_t i2 = 0; i2 < od[2]; ++i2)
        for (int64_t i3 = 0; i3 < od[3]; ++i3)
          po[idx++] = f(pa[i0 * sa[0] + i1 * sa[1] + i2 * sa[2] + i3 * sa[3]],
                        pb[i0 * sb[0] + i1 * sb[1] + i2 * sb[2] + i3 * sb[3]]);
  return out;
}

// Elementwise product evaluated on the broadcast grid of `like`, then
// reduced to `target` — the common backward pattern for broadcast binaries.
template <class F>
inline Tensor binary_grad(const Tensor& g, const Tensor& a, const Tensor& b,
                          const Shape& target, F dfd) {
  Tensor full = binary_map(a, b, dfd);
  Tensor prod = binary_map(g, full, [](double x, double y) { return x * y; });
  return reduce_to_shape(prod, target);
}

}  // namespace detail

// ---- elementwise binaries -------------------------------------------------

inline Var add(const Var& a, const Var& b) {
  Tensor v = detail::binary_map(a.value(), b.value(),
                                [](double x, double y) { return x + y; });
  return make_op(std::move(v), {a, b}, [](Node& n) {
    for (int i = 0; i < 2; ++i)
      if (n.parents[i]->requires_grad)
        n.parents[i]->accum(
            detail::reduce_to_shape(n.grad, n.parents[i]->value.shape()));
  });
}

inline Var sub(const Var& a, const Var& b) {
  Tensor v = detail::binary_map(a.value(), b.value(),
                                [](double x, double y) { return x - y; });
  return make_op(std::move(v), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad)
      n.parents[0]->accum(
          detail::reduce_to_shape(n.grad, n.parents[0]->value.shape()));
    if (n.parents[1]->requires_grad) {
      Tensor g = detail::reduce_to_shape(n.grad, n.parents[1]->value.shape());
      g.scale(-1.0);
      n.parents[1]->accum(g);
    }
  });
}

inline Var mul(const Var& a, const Var& b) {
  Tensor v = detail::binary_map(a.value(), b.value(),
                                [](double x, double y) { return x * y; });
  return make_op(std::move(v), {a, b}, [](Node& n) {
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    if (n.parents[0]->requires_grad)
      n.parents[0]->accum(detail::binary_grad(
          n.grad, bv, av, av.shape(), [](double y, double) { return y; }));
    if (n.parents[1]->requires_grad)
      n.parents[1]->accum(detail::binary_grad(
          n.grad, av, bv, bv.shape(), [](double x, double) { return x; }));
  });
}

inline Var divide(const Var& a, const Var& b) {
  Tensor v = detail::binary_map(a.value(), b.value(),
                                [](double x, double y) { return x / y; });
  return make_op(std::move(v), {a, b}, [](Node& n) {
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    if (n.parents[0]->requires_grad)
      n.parents[0]->accum(detail::binary_grad(
          n.grad, bv, av, av.shape(), [](double y, double) { return 1.0 / y; }));
    if (n.parents[1]->requires_grad)
      n.parents[1]->accum(detail::binary_grad(
          n.grad, av, bv, bv.shape(),
          [](double x, double y) { return -x / (y * y); }));
  });
}

// ---- unary ops -------------------------------------------------------------

inline Var scale(const Var& a, double c) {
  Tensor v = a.value();
  v.scale(c);
  return make_op(std::move(v), {a}, [c](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    Tensor g = n.grad;
    g.scale(c);
    n.parents[0]->accum(g);
  });
}

inline Var neg(const Var& a) { return scale(a, -1.0); }

inline Var add_const(const Var& a, double c) {
  Tensor v = a.value();
  for (int64_t i = 0; i < v.numel(); ++i) v[i] += c;
  return make_op(std::move(v), {a}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->accum(n.grad);
  });
}

inline Var relu(const Var& a) {
  Tensor v = a.value();
  for (int64_t i = 0; i < v.numel(); ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
  return make_op(std::move(v), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    const Tensor& x = n.parents[0]->value;
    Tensor g = n.grad;
    for (int64_t i = 0; i < g.numel(); ++i)
      if (x[i] <= 0.0) g[i] = 0.0;
    n.parents[0]->accum(g);
  });
}

inline Var sigmoid(const Var& a) {
  Tensor v = a.value();
  for (int64_t i = 0; i < v.numel(); ++i) v[i] = 1.0 / (1.0 + std::exp(-v[i]));
  return make_op(std::move(v), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    Tensor g = n.grad;
    for (int64_t i = 0; i < g.numel(); ++i) {
      double s = n.value[i];
      g[i] *= s * (1.0 - s);
    }
    n.parents[0]->accum(g);
  });
}

inline Var log_op(const Var& a) {
  Tensor v = a.value();
  for (int64_t i = 0; i < v.numel(); ++i) v[i] = std::log(v[i]);
  return make_op(std::move(v), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    const Tensor& x = n.parents[0]->value;
    Tensor g = n.grad;
    for (int64_t i = 0; i < g.numel(); ++i) g[i] /= x[i];
    n.parents[0]->accum(g);
  });
}

// PReLU with one slope per channel (axis 1); x rank >= 2, alpha shape [C].
inline Var prelu(const Var& x, const Var& alpha) {
  const Tensor& xv = x.value();
  const Tensor& av = alpha.value();
  if (xv.rank() < 2 || av.rank() != 1 || av.dim(0) != xv.dim(1))
    throw ShapeError("prelu: alpha " + shape_str(av.shape()) +
                     " does not match channels of " + shape_str(xv.shape()));
  int64_t n0 = xv.dim(0), c = xv.dim(1), inner = xv.numel() / (n0 * c);
  Tensor v = xv;
  for (int64_t i = 0; i < n0; ++i)
    for (int64_t j = 0; j < c; ++j) {
      double al = av[j];
      double* p = v.data() + (i * c + j) * inner;
      for (int64_t k = 0; k < inner; ++k)
        if (p[k] < 0.0) p[k] *= al;
    }
  return make_op(std::move(v), {x, alpha}, [n0, c, inner](Node& n) {
    const Tensor& xv2 = n.parents[0]->value;
    const Tensor& av2 = n.parents[1]->value;
    if (n.parents[0]->requires_grad) {
      Tensor gx = n.grad;
      for (int64_t i = 0; i < n0; ++i)
        for (int64_t j = 0; j < c; ++j) {
          double al = av2[j];
          int64_t base = (i * c + j) * inner;
          for (int64_t k = 0; k < inner; ++k)
            if (xv2[base + k] < 0.0) gx[base + k] *= al;
        }
      n.parents[0]->accum(gx);
    }
    if (n.parents[1]->requires_grad) {
      Tensor ga = Tensor::zeros({c});
      for (int64_t i = 0; i < n0; ++i)
        for (int64_t j = 0; j < c; ++j) {
          int64_t base = (i * c + j) * inner;
          double s = 0.0;
          for (int64_t k = 0; k < inner; ++k)
            if (xv2[base + k] < 0.0) s += n.grad[base + k] * xv2[base + k];
          ga[j] += s;
        }
      n.parents[1]->accum(ga);
    }
  });
}

// ---- reductions ------------------------------------------------------------

inline Var sum_all(const Var& a) {
  Tensor v = Tensor::scalar(a.value().sum());
  return make_op(std::move(v), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    n.parents[0]->accum(
        Tensor::full(n.parents[0]->value.shape(), n.grad[0]));
  });
}

inline Var mean_all(const Var& a) {
  double inv = 1.0 / static_cast<double>(a.numel());
  return scale(sum_all(a), inv);
}

inline Var dot(const Var& a, const Var& b) { return sum_all(mul(a, b)); }

// Mean over the channel axis (axis 1) of an N x C x T x F tensor, keepdim.
inline Var channel_mean(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("channel_mean: expected rank-4 input");
  int64_t n0 = xv.dim(0), c = xv.dim(1), t = xv.dim(2), f = xv.dim(3);
  Tensor v = Tensor::zeros({n0, 1, t, f});
  for (int64_t i = 0; i < n0; ++i)
    for (int64_t j = 0; j < c; ++j)
      for (int64_t k = 0; k < t * f; ++k)
        v[i * t * f + k] += xv[(i * c + j) * t * f + k] / double(c);
  return make_op(std::move(v), {x}, [n0, c, t, f](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    Tensor g = Tensor::zeros({n0, c, t, f});
    for (int64_t i = 0; i < n0; ++i)
      for (int64_t j = 0; j < c; ++j)
        for (int64_t k = 0; k < t * f; ++k)
          g[(i * c + j) * t * f + k] = n.grad[i * t * f + k] / double(c);
    n.parents[0]->accum(g);
  });
}

// Max over the channel axis (axis 1), keepdim; backward routes to the argmax.
inline Var channel_max(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("channel_max: expected rank-4 input");
  int64_t n0 = xv.dim(0), c = xv.dim(1), t = xv.dim(2), f = xv.dim(3);
  Tensor v = Tensor::zeros({n0, 1, t, f});
  std::vector<int64_t> arg(size_t(n0 * t * f), 0);
  for (int64_t i = 0; i < n0; ++i)
    for (int64_t k = 0; k < t * f; ++k) {
      double best = xv[(i * c) * t * f + k];
      int64_t bj = 0;
      for (int64_t j = 1; j < c; ++j) {
        double cand = xv[(i * c + j) * t * f + k];
        if (cand > best) {
          best = cand;
          bj = j;
        }
      }
      v[i * t * f + k] = best;
      arg[size_t(i * t * f + k)] = bj;
    }
  return make_op(std::move(v), {x}, [n0, c, t, f, arg](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    Tensor g = Tensor::zeros({n0, c, t, f});
    for (int64_t i = 0; i < n0; ++i)
      for (int64_t k = 0; k < t * f; ++k) {
        int64_t j = arg[size_t(i * t * f + k)];
        g[(i * c + j) * t * f + k] = n.grad[i * t * f + k];
      }
    n.parents[0]->accum(g);
  });
}

// ---- matmul / softmax ------------------------------------------------------

inline Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
    throw ShapeError("matmul: bad shapes " + shape_str(av.shape()) + " x " +
                     shape_str(bv.shape()));
  int64_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  Tensor v({m, n});
  detail::MatMap(v.data(), m, n) = detail::CMatMap(av.data(), m, k) *
                                   detail::CMatMap(bv.data(), k, n);
  return make_op(std::move(v), {a, b}, [m, k, n](Node& node) {
    const Tensor& av2 = node.parents[0]->value;
    const Tensor& bv2 = node.parents[1]->value;
    detail::CMatMap g(node.grad.data(), m, n);
    if (node.parents[0]->requires_grad) {
      Tensor ga({m, k});
      detail::MatMap(ga.data(), m, k) =
          g * detail::CMatMap(bv2.data(), k, n).transpose();
      node.parents[0]->accum(ga);
    }
    if (node.parents[1]->requires_grad) {
      Tensor gb({k, n});
      detail::MatMap(gb.data(), k, n) =
          detail::CMatMap(av2.data(), m, k).transpose() * g;
      node.parents[1]->accum(gb);
    }
  });
}

// Row-wise softmax of a 2-D tensor (softmax along axis 1).
inline Var softmax_rows(const Var& a) {
  const Tensor& av = a.value();
  if (av.rank() != 2) throw ShapeError("softmax_rows: expected rank-2 input");
  int64_t m = av.dim(0), n = av.dim(1);
  Tensor v({m, n});
  for (int64_t i = 0; i < m; ++i) {
    const double* row = av.data() + i * n;
    double* out = v.data() + i * n;
    double mx = row[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double s = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      out[j] = std::exp(row[j] - mx);
      s += out[j];
    }
    for (int64_t j = 0; j < n; ++j) out[j] /= s;
  }
  return make_op(std::move(v), {a}, [m, n](Node& node) {
    if (!node.parents[0]->requires_grad) return;
    Tensor g({m, n});
    for (int64_t i = 0; i < m; ++i) {
      const double* p = node.value.data() + i * n;
      const double* go = node.grad.data() + i * n;
      double dotv = 0.0;
      for (int64_t j = 0; j < n; ++j) dotv += go[j] * p[j];
      double* gi = g.data() + i * n;
      for (int64_t j = 0; j < n; ++j) gi[j] = p[j] * (go[j] - dotv);
    }
    node.parents[0]->accum(g);
  });
}

// ---- shape ops -------------------------------------------------------------

inline Var reshape(const Var& a, Shape s) {
  Tensor v = a.value().reshaped(s);
  return make_op(std::move(v), {a}, [](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    n.parents[0]->accum(n.grad.reshaped(n.parents[0]->value.shape()));
  });
}

// Permutes axes of a rank<=4 tensor (materializing copy).
inline Var permute(const Var& a, std::vector<int> axes) {
  const Tensor& av = a.value();
  int r = av.rank();
  if (static_cast<int>(axes.size()) != r)
    throw ShapeError("permute: axes size mismatch");
  Shape os(r);
  for (int i = 0; i < r; ++i) os[i] = av.dim(axes[i]);
  auto do_permute = [r](const Tensor& src, const std::vector<int>& ax) {
    Shape out_shape(r);
    for (int i = 0; i < r; ++i) out_shape[i] = src.dim(ax[i]);
    Tensor out(out_shape);
    auto sd = detail::padded_dims(src.shape());
    std::array<int64_t, 4> sstr{};
    int64_t acc = 1;
    for (int i = 4; i-- > 0;) {
      sstr[i] = acc;
      acc *= sd[i];
    }
    // Map output index to source index. Work in right-aligned rank-4 space.
    int off = 4 - r;
    std::array<int64_t, 4> od = detail::padded_dims(out_shape);
    std::array<int, 4> src_axis{0, 1, 2, 3};
    for (int i = 0; i < r; ++i) src_axis[off + i] = off + ax[i];
    int64_t idx = 0;
    std::array<int64_t, 4> iv{};
    for (iv[0] = 0; iv[0] < od[0]; ++iv[0])
      for (iv[1] = 0; iv[1] < od[1]; ++iv[1])
        for (iv[2] = 0; iv[2] < od[2]; ++iv[2])
          for (iv[3] = 0; iv[3] < od[3]; ++iv[3]) {
            int64_t s = 0;
            for (int i = 0; i < 4; ++i) s += iv[i] * sstr[src_axis[i]];
            out[idx++] = src[s];
          }
    return out;
  };
  Tensor v = do_permute(av, axes);
  // Inverse permutation for backward.
  std::vector<int> inv(axes.size());
  for (int i = 0; i < r; ++i) inv[axes[i]] = i;
  return make_op(std::move(v), {a}, [do_permute, inv](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    n.parents[0]->accum(do_permute(n.grad, inv));
  });
}

}  // namespace sefpnet
