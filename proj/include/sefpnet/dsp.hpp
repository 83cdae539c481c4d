// Copyright 2026 sefpnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "sefpnet/errors.hpp"
#include "sefpnet/tensor.hpp"

namespace sefpnet {

// Mono waveform. Samples are nominally in [-1, 1]; 8 kHz throughout the
// conformant pipeline.
struct Waveform {
  std::vector<double> samples;
  int sample_rate = 8000;

  int64_t size() const { return static_cast<int64_t>(samples.size()); }
  double duration_s() const { return double(samples.size()) / sample_rate; }
  bool all_finite() const {
    for (double s : samples)
      if (!std::isfinite(s)) return false;
    return true;
  }
};

// Analysis/synthesis configuration. 32 ms periodic-Hann window with 16 ms
// hop (50% overlap) and a 256-point FFT keeps F = 129 at 8 kHz.
struct StftConfig {
  double window_ms = 32.0;
  double hop_ms = 16.0;
  int fft_size = 256;

  int win_length(int sample_rate) const {
    return int(std::lround(window_ms * sample_rate / 1000.0));
  }
  int hop_length(int sample_rate) const {
    return int(std::lround(hop_ms * sample_rate / 1000.0));
  }
  int bins() const { return fft_size / 2 + 1; }

  void validate(int sample_rate) const {
    int win = win_length(sample_rate);
    int hop = hop_length(sample_rate);
    if (win <= 0 || hop <= 0)
      throw ConfigError("stft: window and hop must be positive");
    if (win > fft_size)
      throw ConfigError("stft: window length " + std::to_string(win) +
                        " exceeds fft_size " + std::to_string(fft_size));
    if (win % hop != 0)
      throw ConfigError("stft: hop " + std::to_string(hop) +
                        " does not divide window " + std::to_string(win) +
                        " (COLA violated)");
  }
};

// T x F complex STFT matrix, row-major over frames.
struct ComplexSpectrogram {
  std::vector<std::complex<double>> data;
  int64_t frames = 0;
  int64_t bins = 0;

  ComplexSpectrogram() = default;
  ComplexSpectrogram(int64_t t, int64_t f)
      : data(size_t(t * f)), frames(t), bins(f) {}

  std::complex<double>& at(int64_t t, int64_t f) {
    return data[size_t(t * bins + f)];
  }
  std::complex<double> at(int64_t t, int64_t f) const {
    return data[size_t(t * bins + f)];
  }
};

// Real/imag channel packing of a spectrogram: Tensor shaped {2, T, F} with
// channel 0 = real part, channel 1 = imaginary part.
using RIFeature = Tensor;

inline std::vector<double> hann_periodic(int n) {
  std::vector<double> w(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    w[size_t(i)] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
  return w;
}

namespace detail {

// Frame count with half-window reflect padding on both sides; the last
// frame may run into right-aligned zero padding.
inline int64_t stft_frames(int64_t len, int win, int hop) {
  int64_t total = len + win;  // len + 2*(win/2)
  return (total - win + hop - 1) / hop + 1;
}

// Builds the padded analysis buffer: [reflect | x | reflect | zeros].
inline std::vector<double> pad_signal(const std::vector<double>& x, int win,
                                      int hop, int64_t frames) {
  int pad = win / 2;
  int64_t padded = (frames - 1) * int64_t(hop) + win;
  std::vector<double> buf(size_t(padded), 0.0);
  int64_t n = int64_t(x.size());
  for (int i = 0; i < pad; ++i) {
    int64_t src = pad - i;  // reflect without repeating the edge sample
    buf[size_t(i)] = x[size_t(src < n ? src : n - 1)];
  }
  std::copy(x.begin(), x.end(), buf.begin() + pad);
  for (int64_t i = 0; i < pad; ++i) {
    int64_t src = n - 2 - i;
    if (pad + n + i < padded)
      buf[size_t(pad + n + i)] = x[size_t(src >= 0 ? src : 0)];
  }
  return buf;
}

// Precomputed DFT basis for one fft size: cos/sin tables for the one-sided
// spectrum (F = fft/2 + 1 bins).
struct DftBasis {
  int fft = 0;
  int f_bins = 0;
  std::vector<double> cos_t;  // [F][fft]
  std::vector<double> sin_t;  // [F][fft]

  explicit DftBasis(int fft_size) : fft(fft_size), f_bins(fft_size / 2 + 1) {
    cos_t.resize(size_t(f_bins * fft));
    sin_t.resize(size_t(f_bins * fft));
    for (int k = 0; k < f_bins; ++k)
      for (int n = 0; n < fft; ++n) {
        double ang = 2.0 * M_PI * k * n / fft;
        cos_t[size_t(k * fft + n)] = std::cos(ang);
        sin_t[size_t(k * fft + n)] = std::sin(ang);
      }
  }
};

inline const DftBasis& dft_basis(int fft_size) {
  static DftBasis b256(256);
  if (fft_size == 256) return b256;
  thread_local std::unique_ptr<DftBasis> cached;
  if (!cached || cached->fft != fft_size)
    cached = std::make_unique<DftBasis>(fft_size);
  return *cached;
}

// Real IDFT of a one-sided spectrum row into fft time samples.
inline void irdft_frame(const std::complex<double>* row, const DftBasis& b,
                        double* out) {
  int fft = b.fft, f = b.f_bins;
  for (int n = 0; n < fft; ++n) {
    double acc = row[0].real() * b.cos_t[size_t(n)];
    for (int k = 1; k < f - 1; ++k)
      acc += 2.0 * (row[k].real() * b.cos_t[size_t(k * fft + n)] -
                    row[k].imag() * b.sin_t[size_t(k * fft + n)]);
    acc += row[f - 1].real() * b.cos_t[size_t((f - 1) * fft + n)];
    out[n] = acc / fft;
  }
}

}  // namespace detail

// Short-time Fourier transform with half-window reflect padding.
// T = ceil(L / hop) + 1 frames; F = fft_size/2 + 1 bins.
inline ComplexSpectrogram stft(const Waveform& wave, const StftConfig& cfg) {
  cfg.validate(wave.sample_rate);
  int win = cfg.win_length(wave.sample_rate);
  int hop = cfg.hop_length(wave.sample_rate);
  if (wave.size() < win)
    throw ParamError("stft: signal of " + std::to_string(wave.size()) +
                     " samples is shorter than one window (" +
                     std::to_string(win) + ")");
  if (!wave.all_finite()) throw NumericError("stft: non-finite input sample");
  int64_t frames = detail::stft_frames(wave.size(), win, hop);
  std::vector<double> buf = detail::pad_signal(wave.samples, win, hop, frames);
  std::vector<double> window = hann_periodic(win);
  const auto& basis = detail::dft_basis(cfg.fft_size);
  int f = cfg.bins();
  ComplexSpectrogram spec(frames, f);
  std::vector<double> frame(size_t(cfg.fft_size), 0.0);
  for (int64_t t = 0; t < frames; ++t) {
    for (int i = 0; i < win; ++i)
      frame[size_t(i)] = buf[size_t(t * hop + i)] * window[size_t(i)];
    for (int k = 0; k < f; ++k) {
      double re = 0.0, im = 0.0;
      const double* ct = basis.cos_t.data() + size_t(k) * cfg.fft_size;
      const double* st = basis.sin_t.data() + size_t(k) * cfg.fft_size;
      for (int n = 0; n < cfg.fft_size; ++n) {
        re += frame[size_t(n)] * ct[n];
        im -= frame[size_t(n)] * st[n];
      }
      spec.at(t, k) = {re, im};
    }
  }
  return spec;
}

// Weighted overlap-add inverse. Returns (T-1)*hop samples; exact on every
// returned sample for a COLA-satisfying configuration.
inline Waveform istft(const ComplexSpectrogram& spec, const StftConfig& cfg,
                      int sample_rate = 8000) {
  cfg.validate(sample_rate);
  int win = cfg.win_length(sample_rate);
  int hop = cfg.hop_length(sample_rate);
  if (spec.bins != cfg.bins())
    throw ShapeError("istft: spectrogram has " + std::to_string(spec.bins) +
                     " bins, config expects " + std::to_string(cfg.bins()));
  if (spec.frames < 1) throw ShapeError("istft: empty spectrogram");
  int64_t frames = spec.frames;
  int64_t padded = (frames - 1) * int64_t(hop) + win;
  std::vector<double> acc(size_t(padded), 0.0);
  std::vector<double> wsum(size_t(padded), 0.0);
  std::vector<double> window = hann_periodic(win);
  const auto& basis = detail::dft_basis(cfg.fft_size);
  std::vector<double> frame(size_t(cfg.fft_size));
  for (int64_t t = 0; t < frames; ++t) {
    detail::irdft_frame(spec.data.data() + t * spec.bins, basis, frame.data());
    for (int i = 0; i < win; ++i) {
      acc[size_t(t * hop + i)] += window[size_t(i)] * frame[size_t(i)];
      wsum[size_t(t * hop + i)] += window[size_t(i)] * window[size_t(i)];
    }
  }
  int pad = win / 2;
  int64_t out_len = (frames - 1) * int64_t(hop);
  Waveform out;
  out.sample_rate = sample_rate;
  out.samples.resize(size_t(out_len), 0.0);
  for (int64_t i = 0; i < out_len; ++i) {
    double d = wsum[size_t(pad + i)];
    out.samples[size_t(i)] = d > 1e-12 ? acc[size_t(pad + i)] / d : 0.0;
  }
  return out;
}

// Dynamic range compression: |X|^beta with the phase kept. 0 maps to 0.
inline ComplexSpectrogram drc_compress(const ComplexSpectrogram& spec,
                                       double beta) {
  if (beta <= 0.0) throw ParamError("drc_compress: beta must be > 0");
  ComplexSpectrogram out(spec.frames, spec.bins);
  for (size_t i = 0; i < spec.data.size(); ++i) {
    double m = std::abs(spec.data[i]);
    out.data[i] = m > 0.0 ? spec.data[i] * (std::pow(m, beta) / m)
                          : std::complex<double>(0.0, 0.0);
  }
  return out;
}

// Inverse of drc_compress: |X|^(1/beta) with the phase kept.
inline ComplexSpectrogram drc_expand(const ComplexSpectrogram& spec,
                                     double beta) {
  if (beta <= 0.0) throw ParamError("drc_expand: beta must be > 0");
  ComplexSpectrogram out(spec.frames, spec.bins);
  double p = 1.0 / beta;
  for (size_t i = 0; i < spec.data.size(); ++i) {
    double m = std::abs(spec.data[i]);
    out.data[i] = m > 0.0 ? spec.data[i] * (std::pow(m, p) / m)
                          : std::complex<double>(0.0, 0.0);
  }
  return out;
}

// Packs a spectrogram into a {2, T, F} tensor (channel 0 real, 1 imag).
inline RIFeature to_ri(const ComplexSpectrogram& spec) {
  Tensor out({2, spec.frames, spec.bins});
  int64_t plane = spec.frames * spec.bins;
  for (int64_t i = 0; i < plane; ++i) {
    out[i] = spec.data[size_t(i)].real();
    out[plane + i] = spec.data[size_t(i)].imag();
  }
  return out;
}

// Inverse of to_ri. Rejects tensors whose channel axis is not exactly 2.
inline ComplexSpectrogram from_ri(const RIFeature& f) {
  if (f.rank() != 3 || f.dim(0) != 2)
    throw ShapeError("from_ri: expected {2, T, F} tensor, got " +
                     shape_str(f.shape()));
  ComplexSpectrogram out(f.dim(1), f.dim(2));
  int64_t plane = f.dim(1) * f.dim(2);
  for (int64_t i = 0; i < plane; ++i)
    out.data[size_t(i)] = {f[i], f[plane + i]};
  return out;
}

}  // namespace sefpnet
