// Copyright 2026 sefpnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <memory>
#include <vector>

#include "sefpnet/ops.hpp"

namespace sefpnet {

// Batch normalization over (N, T, F) per channel. Running statistics are
// plain buffers owned by the layer; training mode updates them in place at
// forward time (single-threaded trainer contract).
inline Var batch_norm2d(const Var& x, const Var& gamma, const Var& beta,
                        const std::shared_ptr<Tensor>& running_mean,
                        const std::shared_ptr<Tensor>& running_var,
                        bool training, double momentum = 0.1,
                        double eps = 1e-5) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("batch_norm2d: rank-4 expected");
  int64_t n = xv.dim(0), c = xv.dim(1), t = xv.dim(2), f = xv.dim(3);
  if (gamma.value().numel() != c || beta.value().numel() != c ||
      running_mean->numel() != c || running_var->numel() != c)
    throw ShapeError("batch_norm2d: per-channel parameter size mismatch");
  int64_t plane = t * f;
  int64_t m = n * plane;
  std::vector<double> mu(static_cast<size_t>(c)), inv(static_cast<size_t>(c));
  if (training) {
    for (int64_t ch = 0; ch < c; ++ch) {
      double s = 0.0, s2 = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        const double* p = xv.data() + (i * c + ch) * plane;
        for (int64_t k = 0; k < plane; ++k) {
          s += p[k];
          s2 += p[k] * p[k];
        }
      }
      double mean = s / double(m);
      double var = s2 / double(m) - mean * mean;
      var = var < 0.0 ? 0.0 : var;
      mu[size_t(ch)] = mean;
      inv[size_t(ch)] = 1.0 / std::sqrt(var + eps);
      double unbiased = m > 1 ? var * double(m) / double(m - 1) : var;
      (*running_mean)[ch] = (1.0 - momentum) * (*running_mean)[ch] + momentum * mean;
      (*running_var)[ch] = (1.0 - momentum) * (*running_var)[ch] + momentum * unbiased;
    }
  } else {
    for (int64_t ch = 0; ch < c; ++ch) {
      mu[size_t(ch)] = (*running_mean)[ch];
      inv[size_t(ch)] = 1.0 / std::sqrt((*running_var)[ch] + eps);
    }
  }
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  Tensor out(xv.shape());
  for (int64_t i = 0; i < n; ++i)
    for (int64_t ch = 0; ch < c; ++ch) {
      const double* p = xv.data() + (i * c + ch) * plane;
      double* o = out.data() + (i * c + ch) * plane;
      double a = gv[ch] * inv[size_t(ch)];
      double b2 = bv[ch] - a * mu[size_t(ch)];
      for (int64_t k = 0; k < plane; ++k) o[k] = a * p[k] + b2;
    }
  return make_op(std::move(out), {x, gamma, beta},
                 [n, c, plane, m, mu, inv, training](Node& node) {
    const Tensor& xv2 = node.parents[0]->value;
    const Tensor& gv2 = node.parents[1]->value;
    bool need_x = node.parents[0]->requires_grad;
    bool need_g = node.parents[1]->requires_grad;
    bool need_b = node.parents[2]->requires_grad;
    Tensor gx = need_x ? Tensor::zeros(xv2.shape()) : Tensor();
    Tensor gg = need_g ? Tensor::zeros({c}) : Tensor();
    Tensor gb = need_b ? Tensor::zeros({c}) : Tensor();
    for (int64_t ch = 0; ch < c; ++ch) {
      double mean = mu[size_t(ch)];
      double iv = inv[size_t(ch)];
      double sum_g = 0.0, sum_gx = 0.0;
      for (int64_t i = 0; i < n; ++i) {
        const double* p = xv2.data() + (i * c + ch) * plane;
        const double* g = node.grad.data() + (i * c + ch) * plane;
        for (int64_t k = 0; k < plane; ++k) {
          sum_g += g[k];
          sum_gx += g[k] * (p[k] - mean) * iv;
        }
      }
      if (need_g) gg[ch] = sum_gx;
      if (need_b) gb[ch] = sum_g;
      if (need_x) {
        double a = gv2[ch] * iv;
        for (int64_t i = 0; i < n; ++i) {
          const double* p = xv2.data() + (i * c + ch) * plane;
          const double* g = node.grad.data() + (i * c + ch) * plane;
          double* gxp = gx.data() + (i * c + ch) * plane;
          if (training) {
            for (int64_t k = 0; k < plane; ++k) {
              double xh = (p[k] - mean) * iv;
              gxp[k] = a * (g[k] - sum_g / double(m) - xh * sum_gx / double(m));
            }
          } else {
            for (int64_t k = 0; k < plane; ++k) gxp[k] = a * g[k];
          }
        }
      }
    }
    if (need_x) node.parents[0]->accum(gx);
    if (need_g) node.parents[1]->accum(gg);
    if (need_b) node.parents[2]->accum(gb);
  });
}

}  // namespace sefpnet
