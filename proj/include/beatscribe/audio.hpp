#pragma once

// Minimal RIFF/WAVE reading and writing plus band-limited resampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "beatscribe/errors.hpp"

namespace beatscribe {

/// Mono floating-point PCM.
struct Audio {
  std::vector<float> samples;
  double sample_rate_hz = 0.0;

  double duration_s() const { return samples.size() / sample_rate_hz; }
};

enum class WavEncoding { kPcm16, kFloat32 };

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
         std::uint32_t(p[3]) << 24;
}

inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

inline void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_u16le(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace detail

/// Decodes PCM16 or IEEE float32 WAV; multichannel input is averaged to mono.
inline Audio decode_wav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file");
  }
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t len = detail::read_u32le(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) throw FormatError("truncated WAV chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (len < 16) throw FormatError("short fmt chunk");
      format = detail::read_u16le(chunk + 8);
      channels = detail::read_u16le(chunk + 10);
      rate = detail::read_u32le(chunk + 12);
      bits = detail::read_u16le(chunk + 22);
      if (format == 0xFFFE && len >= 40) format = detail::read_u16le(chunk + 32);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = len;
    }
    pos = body + len + (len & 1u);
  }
  if (channels == 0 || rate == 0) throw FormatError("missing fmt chunk");
  if (data == nullptr) throw FormatError("missing data chunk");
  const bool pcm16 = format == 1 && bits == 16;
  const bool f32 = format == 3 && bits == 32;
  if (!pcm16 && !f32) throw FormatError("only PCM16 and float32 WAV are supported");

  const std::size_t width = bits / 8;
  const std::size_t frames = data_len / (width * channels);
  Audio audio;
  audio.sample_rate_hz = rate;
  audio.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (f * channels + c) * width;
      if (pcm16) {
        acc += static_cast<std::int16_t>(detail::read_u16le(p)) / 32768.0;
      } else {
        const std::uint32_t u = detail::read_u32le(p);
        float v;
        std::memcpy(&v, &u, 4);
        acc += v;
      }
    }
    audio.samples[f] = static_cast<float>(acc / channels);
  }
  return audio;
}

inline Audio read_wav(const std::string& path) { return decode_wav(detail::read_file(path)); }

inline std::vector<unsigned char> encode_wav(const Audio& audio, WavEncoding enc = WavEncoding::kPcm16) {
  const std::uint16_t bits = enc == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint32_t data_len = static_cast<std::uint32_t>(audio.samples.size() * (bits / 8));
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate_hz));
  std::vector<unsigned char> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put_u32le(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put_u32le(out, 16);
  detail::put_u16le(out, enc == WavEncoding::kPcm16 ? 1 : 3);
  detail::put_u16le(out, 1);
  detail::put_u32le(out, rate);
  detail::put_u32le(out, rate * (bits / 8));
  detail::put_u16le(out, bits / 8);
  detail::put_u16le(out, bits);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put_u32le(out, data_len);
  for (float s : audio.samples) {
    if (enc == WavEncoding::kPcm16) {
      const double c = std::clamp(static_cast<double>(s), -1.0, 32767.0 / 32768.0);
      detail::put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32768.0))));
    } else {
      std::uint32_t u;
      std::memcpy(&u, &s, 4);
      detail::put_u32le(out, u);
    }
  }
  return out;
}

inline void write_wav(const std::string& path, const Audio& audio, WavEncoding enc = WavEncoding::kPcm16) {
  detail::write_file(path, encode_wav(audio, enc));
}

/// Hann-windowed sinc interpolation to `target_rate_hz`. The cutoff is
/// lowered to the target Nyquist when downsampling.
inline Audio resample(const Audio& in, double target_rate_hz, int zero_crossings = 16) {
  if (in.sample_rate_hz == target_rate_hz) return in;
  if (!(target_rate_hz > 0.0) || !(in.sample_rate_hz > 0.0)) throw InputError("sample rates must be positive");
  const double ratio = target_rate_hz / in.sample_rate_hz;
  const double cutoff = std::min(1.0, ratio);
  const double half_width = zero_crossings / cutoff;
  const auto n_out = static_cast<std::size_t>(std::ceil(in.samples.size() * ratio));
  Audio out;
  out.sample_rate_hz = target_rate_hz;
  out.samples.resize(n_out);
  const auto n_in = static_cast<std::ptrdiff_t>(in.samples.size());
  for (std::size_t j = 0; j < n_out; ++j) {
    const double x = j / ratio;
    const auto lo = static_cast<std::ptrdiff_t>(std::ceil(x - half_width));
    const auto hi = static_cast<std::ptrdiff_t>(std::floor(x + half_width));
    double acc = 0.0;
    for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(lo, 0); k <= std::min(hi, n_in - 1); ++k) {
      const double d = x - static_cast<double>(k);
      const double arg = std::numbers::pi * cutoff * d;
      const double sinc = d == 0.0 ? 1.0 : std::sin(arg) / arg;
      const double win = 0.5 + 0.5 * std::cos(std::numbers::pi * d / half_width);
      acc += in.samples[static_cast<std::size_t>(k)] * cutoff * sinc * win;
    }
    out.samples[j] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace beatscribe
