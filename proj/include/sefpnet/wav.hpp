// Copyright 2026 sefpnet authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sefpnet/dsp.hpp"

namespace sefpnet {

namespace detail {

inline uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 |
         uint32_t(b[3]) << 24;
}
inline uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return uint16_t(b[0]) | uint16_t(uint32_t(b[1]) << 8);
}
inline void write_u32(std::ostream& out, uint32_t v) {
  char b[4] = {char(v & 0xFF), char(v >> 8 & 0xFF), char(v >> 16 & 0xFF),
               char(v >> 24 & 0xFF)};
  out.write(b, 4);
}
inline void write_u16(std::ostream& out, uint16_t v) {
  char b[2] = {char(v & 0xFF), char(v >> 8 & 0xFF)};
  out.write(b, 2);
}

}  // namespace detail

// Windowed-sinc resampler (Hann window, 16 zero crossings per side).
inline Waveform resample(const Waveform& in, int target_rate) {
  if (target_rate <= 0) throw ParamError("resample: bad target rate");
  if (in.sample_rate == target_rate) return in;
  double ratio = double(target_rate) / in.sample_rate;
  int64_t out_len = int64_t(in.size() * ratio);
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(size_t(out_len), 0.0);
  const int taps = 16;
  // When downsampling, widen the kernel to act as the anti-alias filter.
  double cutoff = ratio < 1.0 ? ratio : 1.0;
  for (int64_t i = 0; i < out_len; ++i) {
    double center = i / ratio;
    int64_t lo = int64_t(std::floor(center)) - int64_t(taps / cutoff) + 1;
    int64_t hi = int64_t(std::floor(center)) + int64_t(taps / cutoff);
    double acc = 0.0;
    for (int64_t j = std::max<int64_t>(lo, 0);
         j <= std::min<int64_t>(hi, in.size() - 1); ++j) {
      double x = (j - center) * cutoff;
      double sinc = x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
      double win = 0.5 * (1.0 + std::cos(M_PI * x / taps));
      acc += in.samples[size_t(j)] * sinc * win * cutoff;
    }
    out.samples[size_t(i)] = acc;
  }
  return out;
}

// Reads a 16-bit PCM mono WAV file. Non-8kHz rates are rejected unless
// allow_resample is set, in which case the signal is resampled to 8 kHz.
inline Waveform read_wav(const std::string& path, bool allow_resample = false,
                         int expected_rate = 8000) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("read_wav: cannot open " + path);
  char riff[4], wavetag[4];
  in.read(riff, 4);
  detail::read_u32(in);  // chunk size
  in.read(wavetag, 4);
  if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(wavetag, "WAVE", 4) != 0)
    throw DataError("read_wav: " + path + " is not a RIFF/WAVE file");
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<int16_t> pcm;
  bool got_fmt = false, got_data = false;
  while (in && !(got_fmt && got_data)) {
    char tag[4];
    in.read(tag, 4);
    if (!in) break;
    uint32_t size = detail::read_u32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = detail::read_u16(in);
      channels = detail::read_u16(in);
      rate = detail::read_u32(in);
      detail::read_u32(in);  // byte rate
      detail::read_u16(in);  // block align
      bits = detail::read_u16(in);
      if (size > 16) in.seekg(size - 16, std::ios::cur);
      got_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      pcm.resize(size / 2);
      in.read(reinterpret_cast<char*>(pcm.data()), std::streamsize(size / 2 * 2));
      got_data = true;
    } else {
      in.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (!got_fmt || !got_data)
    throw DataError("read_wav: " + path + " missing fmt/data chunk");
  if (format != 1 || bits != 16)
    throw DataError("read_wav: " + path + " is not 16-bit PCM");
  if (channels != 1)
    throw DataError("read_wav: " + path + " has " + std::to_string(channels) +
                    " channels; mono required");
  Waveform wave;
  wave.sample_rate = int(rate);
  wave.samples.resize(pcm.size());
  for (size_t i = 0; i < pcm.size(); ++i) wave.samples[i] = pcm[i] / 32768.0;
  if (int(rate) != expected_rate) {
    if (!allow_resample)
      throw DataError("read_wav: " + path + " has sample rate " +
                      std::to_string(rate) + ", expected " +
                      std::to_string(expected_rate) +
                      " (pass the resample flag to convert)");
    wave = resample(wave, expected_rate);
  }
  return wave;
}

// Writes a 16-bit PCM mono WAV file; samples are clipped to [-1, 1].
inline void write_wav(const std::string& path, const Waveform& wave) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("write_wav: cannot open " + path);
  uint32_t data_size = uint32_t(wave.samples.size() * 2);
  out.write("RIFF", 4);
  detail::write_u32(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  detail::write_u32(out, 16);
  detail::write_u16(out, 1);  // PCM
  detail::write_u16(out, 1);  // mono
  detail::write_u32(out, uint32_t(wave.sample_rate));
  detail::write_u32(out, uint32_t(wave.sample_rate * 2));
  detail::write_u16(out, 2);
  detail::write_u16(out, 16);
  out.write("data", 4);
  detail::write_u32(out, data_size);
  for (double s : wave.samples) {
    double c = s < -1.0 ? -1.0 : (s > 1.0 ? 1.0 : s);
    auto v = int16_t(std::lround(c * 32767.0));
    detail::write_u16(out, uint16_t(v));
  }
  if (!out) throw DataError("write_wav: write failed for " + path);
}

}  // namespace sefpnet
