// Copyright 2026 sefpnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <algorithm>
#include <memory>
#include <vector>

#include "sefpnet/ops.hpp"

namespace sefpnet {

namespace detail {

struct ConvGeom {
  int64_t cin, h, w;        // input plane
  int64_t kh, kw;           // kernel
  int64_t sh, sw;           // stride
  int64_t ph, pw;           // zero padding
  int64_t oh, ow;           // output plane

  static ConvGeom of(int64_t cin, int64_t h, int64_t w, int64_t kh, int64_t kw,
                     int64_t sh, int64_t sw, int64_t ph, int64_t pw) {
    ConvGeom g{cin, h, w, kh, kw, sh, sw, ph, pw, 0, 0};
    g.oh = (h + 2 * ph - kh) / sh + 1;
    g.ow = (w + 2 * pw - kw) / sw + 1;
    if (g.oh < 1 || g.ow < 1)
      throw ShapeError("conv: kernel larger than padded input");
    return g;
  }
};

// Gathers sliding windows of one C x H x W plane into a
// (C*kh*kw) x (oh*ow) column matrix.
inline void im2col(const double* x, const ConvGeom& g, double* cols) {
  int64_t plane = g.h * g.w;
  int64_t ocols = g.oh * g.ow;
  for (int64_t c = 0; c < g.cin; ++c)
    for (int64_t ki = 0; ki < g.kh; ++ki)
      for (int64_t kj = 0; kj < g.kw; ++kj) {
        double* row = cols + ((c * g.kh + ki) * g.kw + kj) * ocols;
        for (int64_t oi = 0; oi < g.oh; ++oi) {
          int64_t ii = oi * g.sh + ki - g.ph;
          if (ii < 0 || ii >= g.h) {
            std::fill(row + oi * g.ow, row + (oi + 1) * g.ow, 0.0);
            continue;
          }
          for (int64_t oj = 0; oj < g.ow; ++oj) {
            int64_t jj = oj * g.sw + kj - g.pw;
            row[oi * g.ow + oj] =
                (jj < 0 || jj >= g.w) ? 0.0 : x[c * plane + ii * g.w + jj];
          }
        }
      }
}

// Adjoint of im2col: scatter-adds columns back into the C x H x W plane.
inline void col2im(const double* cols, const ConvGeom& g, double* x) {
  int64_t plane = g.h * g.w;
  int64_t ocols = g.oh * g.ow;
  for (int64_t c = 0; c < g.cin; ++c)
    for (int64_t ki = 0; ki < g.kh; ++ki)
      for (int64_t kj = 0; kj < g.kw; ++kj) {
        const double* row = cols + ((c * g.kh + ki) * g.kw + kj) * ocols;
        for (int64_t oi = 0; oi < g.oh; ++oi) {
          int64_t ii = oi * g.sh + ki - g.ph;
          if (ii < 0 || ii >= g.h) continue;
          for (int64_t oj = 0; oj < g.ow; ++oj) {
            int64_t jj = oj * g.sw + kj - g.pw;
            if (jj >= 0 && jj < g.w) x[c * plane + ii * g.w + jj] += row[oi * g.ow + oj];
          }
        }
      }
}

}  // namespace detail

// 2-D convolution. x: N x Cin x T x F, w: Cout x Cin x kh x kw, b: [Cout].
inline Var conv2d(const Var& x, const Var& w, const Var& b, int64_t sh,
                  int64_t sw, int64_t ph, int64_t pw) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.rank() != 4 || wv.rank() != 4 || xv.dim(1) != wv.dim(1))
    throw ShapeError("conv2d: bad shapes x=" + shape_str(xv.shape()) +
                     " w=" + shape_str(wv.shape()));
  int64_t n = xv.dim(0), cout = wv.dim(0);
  auto g = detail::ConvGeom::of(xv.dim(1), xv.dim(2), xv.dim(3), wv.dim(2),
                                wv.dim(3), sh, sw, ph, pw);
  int64_t krows = g.cin * g.kh * g.kw, ocols = g.oh * g.ow;
  Tensor out({n, cout, g.oh, g.ow});
  std::vector<double> cols(size_t(krows * ocols));
  detail::CMatMap wm(wv.data(), cout, krows);
  for (int64_t i = 0; i < n; ++i) {
    detail::im2col(xv.data() + i * g.cin * g.h * g.w, g, cols.data());
    detail::MatMap(out.data() + i * cout * ocols, cout, ocols) =
        wm * detail::CMatMap(cols.data(), krows, ocols);
  }
  const Tensor& bv = b.value();
  if (bv.numel() != cout) throw ShapeError("conv2d: bias size mismatch");
  for (int64_t i = 0; i < n; ++i)
    for (int64_t c = 0; c < cout; ++c) {
      double* p = out.data() + (i * cout + c) * ocols;
      for (int64_t k = 0; k < ocols; ++k) p[k] += bv[c];
    }
  return make_op(std::move(out), {x, w, b}, [n, cout, g, krows, ocols](Node& node) {
    const Tensor& xv2 = node.parents[0]->value;
    const Tensor& wv2 = node.parents[1]->value;
    bool need_x = node.parents[0]->requires_grad;
    bool need_w = node.parents[1]->requires_grad;
    bool need_b = node.parents[2]->requires_grad;
    Tensor gx = need_x ? Tensor::zeros(xv2.shape()) : Tensor();
    Tensor gw = need_w ? Tensor::zeros(wv2.shape()) : Tensor();
    Tensor gb = need_b ? Tensor::zeros({cout}) : Tensor();
    std::vector<double> cols(size_t(krows * ocols));
    std::vector<double> dcols(size_t(krows * ocols));
    detail::CMatMap wm(wv2.data(), cout, krows);
    for (int64_t i = 0; i < n; ++i) {
      detail::CMatMap gy(node.grad.data() + i * cout * ocols, cout, ocols);
      if (need_w || need_x)
        detail::im2col(xv2.data() + i * g.cin * g.h * g.w, g, cols.data());
      if (need_w)
        detail::MatMap(gw.data(), cout, krows) +=
            gy * detail::CMatMap(cols.data(), krows, ocols).transpose();
      if (need_x) {
        detail::MatMap(dcols.data(), krows, ocols) = wm.transpose() * gy;
        detail::col2im(dcols.data(), g, gx.data() + i * g.cin * g.h * g.w);
      }
      if (need_b)
        for (int64_t c = 0; c < cout; ++c) {
          double s = 0.0;
          const double* p = node.grad.data() + (i * cout + c) * ocols;
          for (int64_t k = 0; k < ocols; ++k) s += p[k];
          gb[c] += s;
        }
    }
    if (need_x) node.parents[0]->accum(gx);
    if (need_w) node.parents[1]->accum(gw);
    if (need_b) node.parents[2]->accum(gb);
  });
}

// Transposed 2-D convolution. x: N x Cin x T x F, w: Cin x Cout x kh x kw.
// Output plane: (T-1)*sh + kh - 2*ph by (F-1)*sw + kw - 2*pw.
inline Var conv_transpose2d(const Var& x, const Var& w, const Var& b,
                            int64_t sh, int64_t sw, int64_t ph, int64_t pw) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.rank() != 4 || wv.rank() != 4 || xv.dim(1) != wv.dim(0))
    throw ShapeError("conv_transpose2d: bad shapes x=" + shape_str(xv.shape()) +
                     " w=" + shape_str(wv.shape()));
  int64_t n = xv.dim(0), cin = xv.dim(1), cout = wv.dim(1);
  int64_t h = xv.dim(2), wd = xv.dim(3);
  int64_t oh = (h - 1) * sh + wv.dim(2) - 2 * ph;
  int64_t ow = (wd - 1) * sw + wv.dim(3) - 2 * pw;
  if (oh < 1 || ow < 1) throw ShapeError("conv_transpose2d: empty output");
  // The roles of input/output planes are swapped relative to conv2d.
  auto g = detail::ConvGeom::of(cout, oh, ow, wv.dim(2), wv.dim(3), sh, sw, ph, pw);
  if (g.oh != h || g.ow != wd)
    throw ShapeError("conv_transpose2d: inconsistent geometry");
  int64_t krows = cout * g.kh * g.kw, icols = h * wd;
  Tensor out = Tensor::zeros({n, cout, oh, ow});
  std::vector<double> cols(size_t(krows * icols));
  detail::CMatMap wm(wv.data(), cin, krows);
  const Tensor& bv = b.value();
  if (bv.numel() != cout) throw ShapeError("conv_transpose2d: bias size mismatch");
  for (int64_t i = 0; i < n; ++i) {
    detail::MatMap(cols.data(), krows, icols) =
        wm.transpose() * detail::CMatMap(xv.data() + i * cin * icols, cin, icols);
    detail::col2im(cols.data(), g, out.data() + i * cout * oh * ow);
    for (int64_t c = 0; c < cout; ++c) {
      double* p = out.data() + (i * cout + c) * oh * ow;
      for (int64_t k = 0; k < oh * ow; ++k) p[k] += bv[c];
    }
  }
  return make_op(std::move(out), {x, w, b},
                 [n, cin, cout, g, krows, icols](Node& node) {
    const Tensor& xv2 = node.parents[0]->value;
    const Tensor& wv2 = node.parents[1]->value;
    bool need_x = node.parents[0]->requires_grad;
    bool need_w = node.parents[1]->requires_grad;
    bool need_b = node.parents[2]->requires_grad;
    Tensor gx = need_x ? Tensor::zeros(xv2.shape()) : Tensor();
    Tensor gw = need_w ? Tensor::zeros(wv2.shape()) : Tensor();
    Tensor gb = need_b ? Tensor::zeros({cout}) : Tensor();
    std::vector<double> cols(size_t(krows * icols));
    detail::CMatMap wm(wv2.data(), cin, krows);
    int64_t oplane = g.h * g.w;
    for (int64_t i = 0; i < n; ++i) {
      const double* gy = node.grad.data() + i * cout * oplane;
      if (need_x || need_w) detail::im2col(gy, g, cols.data());
      if (need_x)
        detail::MatMap(gx.data() + i * cin * icols, cin, icols) =
            wm * detail::CMatMap(cols.data(), krows, icols);
      if (need_w)
        detail::MatMap(gw.data(), cin, krows) +=
            detail::CMatMap(xv2.data() + i * cin * icols, cin, icols) *
            detail::CMatMap(cols.data(), krows, icols).transpose();
      if (need_b)
        for (int64_t c = 0; c < cout; ++c) {
          double s = 0.0;
          const double* p = gy + c * oplane;
          for (int64_t k = 0; k < oplane; ++k) s += p[k];
          gb[c] += s;
        }
    }
    if (need_x) node.parents[0]->accum(gx);
    if (need_w) node.parents[1]->accum(gw);
    if (need_b) node.parents[2]->accum(gb);
  });
}

// Depthwise dilated 1-D convolution, same-length output.
// x: N x C x L, w: C x k, b: [C]; pad = dilation*(k-1)/2 on both sides.
inline Var depthwise_conv1d(const Var& x, const Var& w, const Var& b,
                            int64_t dilation) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.rank() != 3 || wv.rank() != 2 || xv.dim(1) != wv.dim(0))
    throw ShapeError("depthwise_conv1d: bad shapes");
  int64_t n = xv.dim(0), c = xv.dim(1), l = xv.dim(2), k = wv.dim(1);
  int64_t pad = dilation * (k - 1) / 2;
  const Tensor& bv = b.value();
  if (bv.numel() != c) throw ShapeError("depthwise_conv1d: bias size mismatch");
  Tensor out({n, c, l});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t ch = 0; ch < c; ++ch) {
      const double* xp = xv.data() + (i * c + ch) * l;
      double* op = out.data() + (i * c + ch) * l;
      for (int64_t t = 0; t < l; ++t) {
        double s = bv[ch];
        for (int64_t j = 0; j < k; ++j) {
          int64_t src = t + j * dilation - pad;
          if (src >= 0 && src < l) s += wv.at(ch, j) * xp[src];
        }
        op[t] = s;
      }
    }
  return make_op(std::move(out), {x, w, b}, [n, c, l, k, pad, dilation](Node& node) {
    const Tensor& xv2 = node.parents[0]->value;
    const Tensor& wv2 = node.parents[1]->value;
    bool need_x = node.parents[0]->requires_grad;
    bool need_w = node.parents[1]->requires_grad;
    bool need_b = node.parents[2]->requires_grad;
    Tensor gx = need_x ? Tensor::zeros(xv2.shape()) : Tensor();
    Tensor gw = need_w ? Tensor::zeros(wv2.shape()) : Tensor();
    Tensor gb = need_b ? Tensor::zeros({c}) : Tensor();
    for (int64_t i = 0; i < n; ++i)
      for (int64_t ch = 0; ch < c; ++ch) {
        const double* xp = xv2.data() + (i * c + ch) * l;
        const double* gp = node.grad.data() + (i * c + ch) * l;
        double* gxp = need_x ? gx.data() + (i * c + ch) * l : nullptr;
        for (int64_t t = 0; t < l; ++t) {
          double gv = gp[t];
          if (need_b) gb[ch] += gv;
          for (int64_t j = 0; j < k; ++j) {
            int64_t src = t + j * dilation - pad;
            if (src < 0 || src >= l) continue;
            if (need_w) gw.at(ch, j) += gv * xp[src];
            if (need_x) gxp[src] += gv * wv2.at(ch, j);
          }
        }
      }
    if (need_x) node.parents[0]->accum(gx);
    if (need_w) node.parents[1]->accum(gw);
    if (need_b) node.parents[2]->accum(gb);
  });
}

// Global average pool over T x F: N x C x T x F -> N x C x 1 x 1.
inline Var global_avg_pool(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("global_avg_pool: expected rank-4 input");
  int64_t n = xv.dim(0), c = xv.dim(1), plane = xv.dim(2) * xv.dim(3);
  Tensor out({n, c, 1, 1});
  for (int64_t i = 0; i < n * c; ++i) {
    double s = 0.0;
    const double* p = xv.data() + i * plane;
    for (int64_t k = 0; k < plane; ++k) s += p[k];
    out[i] = s / double(plane);
  }
  return make_op(std::move(out), {x}, [n, c, plane](Node& node) {
    if (!node.parents[0]->requires_grad) return;
    Tensor g = Tensor::zeros(node.parents[0]->value.shape());
    for (int64_t i = 0; i < n * c; ++i) {
      double gv = node.grad[i] / double(plane);
      double* p = g.data() + i * plane;
      for (int64_t k = 0; k < plane; ++k) p[k] = gv;
    }
    node.parents[0]->accum(g);
  });
}

// Global max pool over T x F: N x C x T x F -> N x C x 1 x 1.
inline Var global_max_pool(const Var& x) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("global_max_pool: expected rank-4 input");
  int64_t n = xv.dim(0), c = xv.dim(1), plane = xv.dim(2) * xv.dim(3);
  Tensor out({n, c, 1, 1});
  std::vector<int64_t> arg(size_t(n * c), 0);
  for (int64_t i = 0; i < n * c; ++i) {
    const double* p = xv.data() + i * plane;
    int64_t bk = 0;
    for (int64_t k = 1; k < plane; ++k)
      if (p[k] > p[bk]) bk = k;
    out[i] = p[bk];
    arg[size_t(i)] = bk;
  }
  return make_op(std::move(out), {x}, [n, c, plane, arg](Node& node) {
    if (!node.parents[0]->requires_grad) return;
    Tensor g = Tensor::zeros(node.parents[0]->value.shape());
    for (int64_t i = 0; i < n * c; ++i)
      g[i * plane + arg[size_t(i)]] = node.grad[i];
    node.parents[0]->accum(g);
  });
}

namespace detail {
inline void pool_bins(int64_t in, int64_t out, std::vector<int64_t>& start,
                      std::vector<int64_t>& end) {
  start.resize(size_t(out));
  end.resize(size_t(out));
  for (int64_t i = 0; i < out; ++i) {
    start[size_t(i)] = (i * in) / out;
    end[size_t(i)] = ((i + 1) * in + out - 1) / out;
  }
}
}  // namespace detail

// Adaptive average pooling to an (ot, of) grid.
inline Var adaptive_avg_pool2d(const Var& x, int64_t ot, int64_t of) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("adaptive_avg_pool2d: rank-4 expected");
  int64_t n = xv.dim(0), c = xv.dim(1), t = xv.dim(2), f = xv.dim(3);
  ot = std::min(ot, t);
  of = std::min(of, f);
  std::vector<int64_t> ts, te, fs, fe;
  detail::pool_bins(t, ot, ts, te);
  detail::pool_bins(f, of, fs, fe);
  Tensor out({n, c, ot, of});
  for (int64_t i = 0; i < n * c; ++i) {
    const double* p = xv.data() + i * t * f;
    double* op = out.data() + i * ot * of;
    for (int64_t oi = 0; oi < ot; ++oi)
      for (int64_t oj = 0; oj < of; ++oj) {
        double s = 0.0;
        for (int64_t ii = ts[size_t(oi)]; ii < te[size_t(oi)]; ++ii)
          for (int64_t jj = fs[size_t(oj)]; jj < fe[size_t(oj)]; ++jj)
            s += p[ii * f + jj];
        int64_t cnt = (te[size_t(oi)] - ts[size_t(oi)]) *
                      (fe[size_t(oj)] - fs[size_t(oj)]);
        op[oi * of + oj] = s / double(cnt);
      }
  }
  return make_op(std::move(out), {x}, [n, c, t, f, ot, of, ts, te, fs, fe](Node& node) {
    if (!node.parents[0]->requires_grad) return;
    Tensor g = Tensor::zeros({n, c, t, f});
    for (int64_t i = 0; i < n * c; ++i) {
      double* gp = g.data() + i * t * f;
      const double* op = node.grad.data() + i * ot * of;
      for (int64_t oi = 0; oi < ot; ++oi)
        for (int64_t oj = 0; oj < of; ++oj) {
          int64_t cnt = (te[size_t(oi)] - ts[size_t(oi)]) *
                        (fe[size_t(oj)] - fs[size_t(oj)]);
          double gv = op[oi * of + oj] / double(cnt);
          for (int64_t ii = ts[size_t(oi)]; ii < te[size_t(oi)]; ++ii)
            for (int64_t jj = fs[size_t(oj)]; jj < fe[size_t(oj)]; ++jj)
              gp[ii * f + jj] += gv;
        }
    }
    node.parents[0]->accum(g);
  });
}

// Nearest-neighbour upsampling to (ot, of).
inline Var upsample_nearest(const Var& x, int64_t ot, int64_t of) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("upsample_nearest: rank-4 expected");
  int64_t n = xv.dim(0), c = xv.dim(1), t = xv.dim(2), f = xv.dim(3);
  Tensor out({n, c, ot, of});
  for (int64_t i = 0; i < n * c; ++i) {
    const double* p = xv.data() + i * t * f;
    double* op = out.data() + i * ot * of;
    for (int64_t oi = 0; oi < ot; ++oi) {
      int64_t si = (oi * t) / ot;
      for (int64_t oj = 0; oj < of; ++oj) op[oi * of + oj] = p[si * f + (oj * f) / of];
    }
  }
  return make_op(std::move(out), {x}, [n, c, t, f, ot, of](Node& node) {
    if (!node.parents[0]->requires_grad) return;
    Tensor g = Tensor::zeros({n, c, t, f});
    for (int64_t i = 0; i < n * c; ++i) {
      double* gp = g.data() + i * t * f;
      const double* op = node.grad.data() + i * ot * of;
      for (int64_t oi = 0; oi < ot; ++oi) {
        int64_t si = (oi * t) / ot;
        for (int64_t oj = 0; oj < of; ++oj)
          gp[si * f + (oj * f) / of] += op[oi * of + oj];
      }
    }
    node.parents[0]->accum(g);
  });
}

// Channel-axis concatenation of rank-4 tensors.
inline Var concat_channels(const std::vector<Var>& xs) {
  if (xs.empty()) throw ShapeError("concat_channels: empty input list");
  int64_t n = xs[0].value().dim(0), t = xs[0].value().dim(2),
          f = xs[0].value().dim(3);
  int64_t ctot = 0;
  for (const Var& x : xs) {
    const Tensor& v = x.value();
    if (v.rank() != 4 || v.dim(0) != n || v.dim(2) != t || v.dim(3) != f)
      throw ShapeError("concat_channels: mismatched shapes");
    ctot += v.dim(1);
  }
  Tensor out({n, ctot, t, f});
  int64_t plane = t * f;
  int64_t coff = 0;
  std::vector<int64_t> offs;
  std::vector<int64_t> cs;
  for (const Var& x : xs) {
    int64_t c = x.value().dim(1);
    offs.push_back(coff);
    cs.push_back(c);
    for (int64_t i = 0; i < n; ++i)
      std::copy(x.value().data() + i * c * plane,
                x.value().data() + (i + 1) * c * plane,
                out.data() + (i * ctot + coff) * plane);
    coff += c;
  }
  return make_op(std::move(out), xs, [n, ctot, plane, offs, cs](Node& node) {
    for (size_t p = 0; p < node.parents.size(); ++p) {
      if (!node.parents[p]->requires_grad) continue;
      int64_t c = cs[p];
      Tensor g(node.parents[p]->value.shape());
      for (int64_t i = 0; i < n; ++i)
        std::copy(node.grad.data() + (i * ctot + offs[p]) * plane,
                  node.grad.data() + (i * ctot + offs[p] + c) * plane,
                  g.data() + i * c * plane);
      node.parents[p]->accum(g);
    }
  });
}

// Zero-pads the T and F axes (before/after each).
inline Var pad2d(const Var& x, int64_t t0, int64_t t1, int64_t f0, int64_t f1) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("pad2d: rank-4 expected");
  int64_t n = xv.dim(0), c = xv.dim(1), t = xv.dim(2), f = xv.dim(3);
  Tensor out = Tensor::zeros({n, c, t + t0 + t1, f + f0 + f1});
  int64_t fo = f + f0 + f1;
  for (int64_t i = 0; i < n * c; ++i)
    for (int64_t ti = 0; ti < t; ++ti)
      std::copy(xv.data() + (i * t + ti) * f, xv.data() + (i * t + ti + 1) * f,
                out.data() + (i * (t + t0 + t1) + ti + t0) * fo + f0);
  return make_op(std::move(out), {x}, [n, c, t, f, t0, f0, fo](Node& node) {
    if (!node.parents[0]->requires_grad) return;
    Tensor g({n, c, t, f});
    int64_t to = node.value.dim(2);
    for (int64_t i = 0; i < n * c; ++i)
      for (int64_t ti = 0; ti < t; ++ti)
        std::copy(node.grad.data() + (i * to + ti + t0) * fo + f0,
                  node.grad.data() + (i * to + ti + t0) * fo + f0 + f,
                  g.data() + (i * t + ti) * f);
    node.parents[0]->accum(g);
  });
}

// Crops [t0, t0+tl) x [f0, f0+fl) from the T/F axes.
inline Var crop2d(const Var& x, int64_t t0, int64_t tl, int64_t f0, int64_t fl) {
  const Tensor& xv = x.value();
  if (xv.rank() != 4) throw ShapeError("crop2d: rank-4 expected");
  int64_t n = xv.dim(0), c = xv.dim(1), t = xv.dim(2), f = xv.dim(3);
  if (t0 < 0 || f0 < 0 || t0 + tl > t || f0 + fl > f)
    throw ShapeError("crop2d: window out of range");
  Tensor out({n, c, tl, fl});
  for (int64_t i = 0; i < n * c; ++i)
    for (int64_t ti = 0; ti < tl; ++ti)
      std::copy(xv.data() + (i * t + ti + t0) * f + f0,
                xv.data() + (i * t + ti + t0) * f + f0 + fl,
                out.data() + (i * tl + ti) * fl);
  return make_op(std::move(out), {x}, [n, c, t, f, t0, tl, f0, fl](Node& node) {
    if (!node.parents[0]->requires_grad) return;
    Tensor g = Tensor::zeros({n, c, t, f});
    for (int64_t i = 0; i < n * c; ++i)
      for (int64_t ti = 0; ti < tl; ++ti) {
        const double* src = node.grad.data() + (i * tl + ti) * fl;
        double* dst = g.data() + (i * t + ti + t0) * f + f0;
        for (int64_t fj = 0; fj < fl; ++fj) dst[fj] += src[fj];
      }
    node.parents[0]->accum(g);
  });
}

}  // namespace sefpnet
