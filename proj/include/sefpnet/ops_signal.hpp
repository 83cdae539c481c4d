// Copyright 2026 sefpnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <vector>

#include "sefpnet/dsp.hpp"
#include "sefpnet/ops.hpp"

namespace sefpnet {

// Selects row i of an N x L tensor as a 1-D view.
inline Var select_row(const Var& x, int64_t i) {
  const Tensor& xv = x.value();
  if (xv.rank() != 2 || i < 0 || i >= xv.dim(0))
    throw ShapeError("select_row: bad index");
  int64_t l = xv.dim(1);
  Tensor v({l});
  std::copy(xv.data() + i * l, xv.data() + (i + 1) * l, v.data());
  return make_op(std::move(v), {x}, [i, l](Node& n) {
    if (!n.parents[0]->requires_grad) return;
    Tensor g = Tensor::zeros(n.parents[0]->value.shape());
    std::copy(n.grad.data(), n.grad.data() + l, g.data() + i * l);
    n.parents[0]->accum(g);
  });
}

// DRC expansion on a real/imag channel pair: (r, i) -> m^(1/beta - 1) (r, i)
// with m = sqrt(r^2 + i^2). x: N x 2 x T x F. Smooth at the origin for
// beta <= 1 (the gradient limit there is zero).
inline Var drc_expand_ri(const Var& x, double beta) {
  if (beta <= 0.0) throw ParamError("drc_expand_ri: beta must be > 0");
  const Tensor& xv = x.value();
  if (xv.rank() != 4 || xv.dim(1) != 2)
    throw ShapeError("drc_expand_ri: expected N x 2 x T x F, got " +
                     shape_str(xv.shape()));
  double p = 1.0 / beta;
  int64_t n = xv.dim(0), plane = xv.dim(2) * xv.dim(3);
  Tensor out(xv.shape());
  for (int64_t b = 0; b < n; ++b) {
    const double* r = xv.data() + (b * 2 + 0) * plane;
    const double* im = xv.data() + (b * 2 + 1) * plane;
    double* orr = out.data() + (b * 2 + 0) * plane;
    double* oi = out.data() + (b * 2 + 1) * plane;
    for (int64_t k = 0; k < plane; ++k) {
      double m = std::hypot(r[k], im[k]);
      double fac = m > 0.0 ? std::pow(m, p - 1.0) : 0.0;
      orr[k] = fac * r[k];
      oi[k] = fac * im[k];
    }
  }
  return make_op(std::move(out), {x}, [p, n, plane](Node& node) {
    if (!node.parents[0]->requires_grad) return;
    const Tensor& xv2 = node.parents[0]->value;
    Tensor g = Tensor::zeros(xv2.shape());
    for (int64_t b = 0; b < n; ++b) {
      const double* r = xv2.data() + (b * 2 + 0) * plane;
      const double* im = xv2.data() + (b * 2 + 1) * plane;
      const double* gr = node.grad.data() + (b * 2 + 0) * plane;
      const double* gi = node.grad.data() + (b * 2 + 1) * plane;
      double* dr = g.data() + (b * 2 + 0) * plane;
      double* di = g.data() + (b * 2 + 1) * plane;
      for (int64_t k = 0; k < plane; ++k) {
        double m = std::hypot(r[k], im[k]);
        if (m <= 0.0) continue;
        double fac = std::pow(m, p - 1.0);
        double dfac = (p - 1.0) * std::pow(m, p - 3.0);
        // d(out_r)/dr = fac + dfac r^2, d(out_r)/di = dfac r i, ...
        dr[k] = gr[k] * (fac + dfac * r[k] * r[k]) + gi[k] * dfac * r[k] * im[k];
        di[k] = gi[k] * (fac + dfac * im[k] * im[k]) + gr[k] * dfac * r[k] * im[k];
      }
    }
    node.parents[0]->accum(g);
  });
}

// Differentiable weighted overlap-add iSTFT of an N x 2 x T x F real/imag
// spectrogram, truncated to out_len samples per batch item. Linear in the
// input; backward is the exact adjoint. Matches dsp::istft up to the
// final truncation.
inline Var istft_ri(const Var& spec_ri, const StftConfig& cfg, int sample_rate,
                    int64_t out_len) {
  cfg.validate(sample_rate);
  const Tensor& sv = spec_ri.value();
  if (sv.rank() != 4 || sv.dim(1) != 2 || sv.dim(3) != cfg.bins())
    throw ShapeError("istft_ri: expected N x 2 x T x " +
                     std::to_string(cfg.bins()) + ", got " +
                     shape_str(sv.shape()));
  int win = cfg.win_length(sample_rate);
  int hop = cfg.hop_length(sample_rate);
  int fft = cfg.fft_size;
  int f = cfg.bins();
  int64_t n = sv.dim(0), frames = sv.dim(2);
  int64_t padded = (frames - 1) * int64_t(hop) + win;
  int pad = win / 2;
  if (out_len > padded - pad)
    throw ShapeError("istft_ri: requested length exceeds frame coverage");
  std::vector<double> window = hann_periodic(win);
  std::vector<double> wsum(size_t(padded), 0.0);
  for (int64_t t = 0; t < frames; ++t)
    for (int i = 0; i < win; ++i)
      wsum[size_t(t * hop + i)] += window[size_t(i)] * window[size_t(i)];
  const auto& basis = detail::dft_basis(fft);
  Tensor out = Tensor::zeros({n, out_len});
  int64_t plane = frames * f;
  std::vector<double> frame(static_cast<size_t>(fft));
  std::vector<std::complex<double>> row(static_cast<size_t>(f));
  for (int64_t b = 0; b < n; ++b) {
    std::vector<double> acc(size_t(padded), 0.0);
    const double* re = sv.data() + (b * 2 + 0) * plane;
    const double* im = sv.data() + (b * 2 + 1) * plane;
    for (int64_t t = 0; t < frames; ++t) {
      for (int k = 0; k < f; ++k)
        row[size_t(k)] = {re[t * f + k], im[t * f + k]};
      detail::irdft_frame(row.data(), basis, frame.data());
      for (int i = 0; i < win; ++i)
        acc[size_t(t * hop + i)] += window[size_t(i)] * frame[size_t(i)];
    }
    for (int64_t i = 0; i < out_len; ++i) {
      double d = wsum[size_t(pad + i)];
      out.data()[b * out_len + i] = d > 1e-12 ? acc[size_t(pad + i)] / d : 0.0;
    }
  }
  return make_op(
      std::move(out), {spec_ri},
      [win, hop, fft, f, n, frames, padded, pad, out_len, window, wsum](Node& node) {
        if (!node.parents[0]->requires_grad) return;
        const auto& basis = detail::dft_basis(fft);
        Tensor g = Tensor::zeros(node.parents[0]->value.shape());
        int64_t plane = frames * f;
        std::vector<double> gacc(static_cast<size_t>(padded));
        std::vector<double> gframe(static_cast<size_t>(fft));
        for (int64_t b = 0; b < n; ++b) {
          std::fill(gacc.begin(), gacc.end(), 0.0);
          for (int64_t i = 0; i < out_len; ++i) {
            double d = wsum[size_t(pad + i)];
            if (d > 1e-12)
              gacc[size_t(pad + i)] = node.grad[b * out_len + i] / d;
          }
          double* gre = g.data() + (b * 2 + 0) * plane;
          double* gim = g.data() + (b * 2 + 1) * plane;
          for (int64_t t = 0; t < frames; ++t) {
            std::fill(gframe.begin(), gframe.end(), 0.0);
            for (int i = 0; i < win; ++i)
              gframe[size_t(i)] = window[size_t(i)] * gacc[size_t(t * hop + i)];
            // Adjoint of the real IDFT row.
            for (int k = 0; k < f; ++k) {
              double sr = 0.0, si = 0.0;
              const double* ct = basis.cos_t.data() + size_t(k) * fft;
              const double* st = basis.sin_t.data() + size_t(k) * fft;
              double w2 = (k == 0 || k == f - 1) ? 1.0 : 2.0;
              for (int nn = 0; nn < fft; ++nn) {
                sr += gframe[size_t(nn)] * ct[nn];
                si += gframe[size_t(nn)] * st[nn];
              }
              gre[t * f + k] += w2 * sr / fft;
              gim[t * f + k] += w2 * si / fft;
            }
          }
        }
        node.parents[0]->accum(g);
      });
}

}  // namespace sefpnet
