#pragma once

// Time-rate feature matrices, the SSFT file format, log-mel extraction and
// beat-wise resampling onto the sixteenth-note grid.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "beatscribe/align.hpp"
#include "beatscribe/audio.hpp"
#include "beatscribe/matrix.hpp"

namespace beatscribe {

/// Features sampled uniformly in time. Frame j is centered at
/// t0_s + j / rate_hz.
struct FeatureMatrix {
  double rate_hz = 1.0;
  double t0_s = 0.0;
  Matrix<float> frames;

  std::size_t num_frames() const noexcept { return frames.rows; }
  std::size_t dim() const noexcept { return frames.cols; }
  double frame_time(std::size_t j) const { return t0_s + static_cast<double>(j) / rate_hz; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

/// Features on the sixteenth-note grid, one row per tick.
struct ResampledFeatures {
  Matrix<double> frames;

  std::size_t ticks() const noexcept { return frames.rows; }
  std::size_t dim() const noexcept { return frames.cols; }
};

// ---------------------------------------------------------------------------
// SSFT files.
//
// Little-endian: "SSFT", u32 version (1), f64 rate_hz, u32 dim, u64 n_frames,
// f64 t0_s, then n_frames * dim f32 values row-major.

inline constexpr std::uint32_t kSsftVersion = 1;
inline constexpr std::size_t kSsftHeaderBytes = 36;

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

template <class T>
T get_le(const unsigned char* p) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

inline std::vector<unsigned char> encode_ssft(const FeatureMatrix& x) {
  std::vector<unsigned char> out;
  out.reserve(kSsftHeaderBytes + x.frames.data.size() * 4);
  out.insert(out.end(), {'S', 'S', 'F', 'T'});
  detail::put_le<std::uint32_t>(out, kSsftVersion);
  detail::put_le<double>(out, x.rate_hz);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(x.dim()));
  detail::put_le<std::uint64_t>(out, x.num_frames());
  detail::put_le<double>(out, x.t0_s);
  for (float v : x.frames.data) {
    if (!std::isfinite(v)) throw FormatError("refusing to write a non-finite feature value");
    detail::put_le<float>(out, v);
  }
  return out;
}

inline FeatureMatrix decode_ssft(std::span<const unsigned char> bytes) {
  if (bytes.size() < kSsftHeaderBytes || std::memcmp(bytes.data(), "SSFT", 4) != 0) {
    throw FormatError("bad SSFT magic");
  }
  const unsigned char* p = bytes.data();
  if (detail::get_le<std::uint32_t>(p + 4) != kSsftVersion) throw FormatError("unsupported SSFT version");
  FeatureMatrix x;
  x.rate_hz = detail::get_le<double>(p + 8);
  const auto dim = detail::get_le<std::uint32_t>(p + 16);
  const auto n = detail::get_le<std::uint64_t>(p + 20);
  x.t0_s = detail::get_le<double>(p + 28);
  if (!(x.rate_hz > 0.0) || !std::isfinite(x.rate_hz) || !std::isfinite(x.t0_s)) {
    throw FormatError("SSFT header has an invalid rate or origin");
  }
  if (dim == 0 || n == 0) throw FormatError("SSFT matrix must have at least one frame and one dimension");
  const std::uint64_t payload = bytes.size() - kSsftHeaderBytes;
  if (n > payload / 4 / dim || payload != n * dim * 4) {
    throw FormatError("SSFT payload holds " + std::to_string(payload) + " bytes, header promises " +
                      std::to_string(n) + " x " + std::to_string(dim) + " floats");
  }
  x.frames = Matrix<float>(n, dim);
  const unsigned char* body = p + kSsftHeaderBytes;
  for (std::size_t i = 0; i < x.frames.data.size(); ++i) {
    const float v = detail::get_le<float>(body + 4 * i);
    if (!std::isfinite(v)) throw FormatError("non-finite value at element " + std::to_string(i));
    x.frames.data[i] = v;
  }
  return x;
}

inline FeatureMatrix load_features(const std::string& path) { return decode_ssft(detail::read_file(path)); }

inline void save_features(const std::string& path, const FeatureMatrix& x) {
  detail::write_file(path, encode_ssft(x));
}

/// Resampled features stored as SSFT with rate 4 (ticks per beat) and origin 0.
inline FeatureMatrix as_feature_matrix(const ResampledFeatures& r) {
  FeatureMatrix x;
  x.rate_hz = kTicksPerBeat;
  x.t0_s = 0.0;
  x.frames = Matrix<float>(r.ticks(), r.dim());
  for (std::size_t i = 0; i < r.frames.data.size(); ++i) x.frames.data[i] = static_cast<float>(r.frames.data[i]);
  return x;
}

inline ResampledFeatures as_resampled(const FeatureMatrix& x) {
  if (x.num_frames() % kTicksPerBeat != 0) throw ShapeError("tick count must be a multiple of 4");
  ResampledFeatures r;
  r.frames = Matrix<double>(x.num_frames(), x.dim());
  std::copy(x.frames.data.begin(), x.frames.data.end(), r.frames.data.begin());
  return r;
}

// ---------------------------------------------------------------------------
// Log-mel spectrogram.

struct LogMelParams {
  double sample_rate_hz = 16000.0;
  std::size_t n_fft = 2048;
  std::size_t hop = 512;
  std::size_t n_mels = 229;
  double fmin_hz = 30.0;
  double fmax_hz = 8000.0;
  double log_offset = 1e-6;
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular filters on the HTK mel scale with area normalization;
/// `n_mels` rows by `n_fft / 2 + 1` columns.
inline Matrix<double> mel_filterbank(const LogMelParams& p) {
  const std::size_t n_bins = p.n_fft / 2 + 1;
  std::vector<double> edges(p.n_mels + 2);
  const double lo = hz_to_mel(p.fmin_hz);
  const double hi = hz_to_mel(p.fmax_hz);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(p.n_mels + 1));
  }
  Matrix<double> w(p.n_mels, n_bins);
  for (std::size_t m = 0; m < p.n_mels; ++m) {
    const double norm = 2.0 / (edges[m + 2] - edges[m]);
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * p.sample_rate_hz / static_cast<double>(p.n_fft);
      const double rise = (f - edges[m]) / (edges[m + 1] - edges[m]);
      const double fall = (edges[m + 2] - f) / (edges[m + 2] - edges[m + 1]);
      w(m, k) = std::max(0.0, std::min(rise, fall)) * norm;
    }
  }
  return w;
}

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Owns one real-to-complex FFTW plan and its buffers.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }

  std::span<double> input() { return {in_, n_}; }

  /// Magnitudes of bins 0..n/2 after transforming the current input.
  void magnitudes(std::span<double> out) {
    fftw_execute(plan_);
    for (std::size_t k = 0; k <= n_ / 2; ++k) out[k] = std::hypot(out_[k][0], out_[k][1]);
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

}  // namespace detail

/// Log-amplitude mel spectrogram at 16 kHz: Hann window 2048, hop 512,
/// 229 bands over 30-8000 Hz, log(amplitude + 1e-6). Frame j is centered
/// on sample j * hop; there are ceil(samples / hop) frames.
inline FeatureMatrix logmel(const Audio& audio, const LogMelParams& p = {}) {
  if (audio.samples.empty()) throw InputError("empty audio");
  if (!(audio.sample_rate_hz > 0.0)) throw InputError("sample rate must be positive");
  const Audio a = resample(audio, p.sample_rate_hz);
  const std::size_t n = a.samples.size();
  const std::size_t n_frames = (n + p.hop - 1) / p.hop;
  const std::size_t n_bins = p.n_fft / 2 + 1;
  const Matrix<double> fb = mel_filterbank(p);

  std::vector<double> window(p.n_fft);
  for (std::size_t i = 0; i < p.n_fft; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(p.n_fft));
  }

  detail::RealFft fft(p.n_fft);
  std::vector<double> mag(n_bins);
  FeatureMatrix x;
  x.rate_hz = p.sample_rate_hz / static_cast<double>(p.hop);
  x.t0_s = 0.0;
  x.frames = Matrix<float>(n_frames, p.n_mels);
  const auto half = static_cast<std::ptrdiff_t>(p.n_fft / 2);
  for (std::size_t j = 0; j < n_frames; ++j) {
    auto buf = fft.input();
    const auto start = static_cast<std::ptrdiff_t>(j * p.hop) - half;
    for (std::size_t i = 0; i < p.n_fft; ++i) {
      const std::ptrdiff_t s = start + static_cast<std::ptrdiff_t>(i);
      buf[i] = (s >= 0 && s < static_cast<std::ptrdiff_t>(n)) ? a.samples[static_cast<std::size_t>(s)] * window[i] : 0.0;
    }
    fft.magnitudes(mag);
    for (std::size_t m = 0; m < p.n_mels; ++m) {
      double acc = 0.0;
      const auto wrow = fb.row(m);
      for (std::size_t k = 0; k < n_bins; ++k) acc += wrow[k] * mag[k];
      x.frames(j, m) = static_cast<float>(std::log(acc + p.log_offset));
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// Beat-wise resampling.

/// Tick index each frame is pooled into, or -1 for frames outside the
/// covered span. A frame goes to the tick time nearest its center (ties:
/// lower tick). The span runs half a tick beyond the first and last ticks.
inline std::vector<long> frame_assignment(const FeatureMatrix& x, const AlignmentMap& map) {
  const int n_ticks = map.num_ticks();
  std::vector<double> tick_t(static_cast<std::size_t>(n_ticks) + 1);
  for (int i = 0; i <= n_ticks; ++i) tick_t[static_cast<std::size_t>(i)] = tick_time(map, i);
  const double span_lo = tick_t[0] - 0.5 * (tick_t[1] - tick_t[0]);
  const double span_hi = tick_t[n_ticks - 1] + 0.5 * (tick_t[n_ticks] - tick_t[n_ticks - 1]);

  std::vector<long> out(x.num_frames(), -1);
  const auto last = tick_t.begin() + n_ticks;  // real ticks are [begin, last)
  for (std::size_t j = 0; j < x.num_frames(); ++j) {
    const double t = x.frame_time(j);
    if (t < span_lo || t >= span_hi) continue;
    auto it = std::lower_bound(tick_t.begin(), last, t);
    long i;
    if (it == tick_t.begin()) {
      i = 0;
    } else if (it == last) {
      i = n_ticks - 1;
    } else {
      const long hi = it - tick_t.begin();
      const double d_hi = *it - t;
      const double d_lo = t - *(it - 1);
      i = d_hi < d_lo ? hi : hi - 1;
    }
    out[j] = i;
  }
  return out;
}

/// Averages the frames nearest each sixteenth note of the alignment into
/// one row per tick. A tick with no nearest frame copies the single frame
/// closest to it.
inline ResampledFeatures beatwise_resample(const FeatureMatrix& x, const AlignmentMap& map) {
  if (x.num_frames() == 0 || x.dim() == 0) throw ShapeError("empty feature matrix");
  const int n_ticks = map.num_ticks();
  const double cover_lo = x.t0_s;
  const double cover_hi = x.t0_s + static_cast<double>(x.num_frames()) / x.rate_hz;
  for (int i = 0; i < n_ticks; ++i) {
    const double t = tick_time(map, i);
    if (t < cover_lo || t > cover_hi) throw CoverageError(static_cast<std::size_t>(i), t);
  }

  const auto assign = frame_assignment(x, map);
  const std::size_t d = x.dim();
  ResampledFeatures out;
  out.frames = Matrix<double>(static_cast<std::size_t>(n_ticks), d, 0.0);
  std::vector<std::size_t> count(static_cast<std::size_t>(n_ticks), 0);
  for (std::size_t j = 0; j < assign.size(); ++j) {
    if (assign[j] < 0) continue;
    const auto i = static_cast<std::size_t>(assign[j]);
    auto dst = out.frames.row(i);
    const auto src = x.frames.row(j);
    for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    ++count[i];
  }
  for (std::size_t i = 0; i < count.size(); ++i) {
    auto dst = out.frames.row(i);
    if (count[i] > 0) {
      for (auto& v : dst) v /= static_cast<double>(count[i]);
      continue;
    }
    const double t = tick_time(map, static_cast<int>(i));
    const double pos = (t - x.t0_s) * x.rate_hz;
    auto j = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(x.num_frames() - 1)));
    if (j + 1 < x.num_frames() && std::abs(x.frame_time(j + 1) - t) < std::abs(x.frame_time(j) - t)) ++j;
    const auto src = x.frames.row(j);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

/// Column-wise concatenation of features sharing one tick grid.
inline ResampledFeatures concat_features(std::span<const ResampledFeatures> parts) {
  if (parts.empty()) throw ShapeError("nothing to concatenate");
  const std::size_t ticks = parts[0].ticks();
  std::size_t dim = 0;
  for (const auto& p : parts) {
    if (p.ticks() != ticks) {
      throw ShapeError("tick counts differ: " + std::to_string(ticks) + " vs " + std::to_string(p.ticks()));
    }
    dim += p.dim();
  }
  ResampledFeatures out;
  out.frames = Matrix<double>(ticks, dim);
  for (std::size_t i = 0; i < ticks; ++i) {
    std::size_t c0 = 0;
    for (const auto& p : parts) {
      const auto src = p.frames.row(i);
      std::copy(src.begin(), src.end(), out.frames.row(i).begin() + static_cast<std::ptrdiff_t>(c0));
      c0 += p.dim();
    }
  }
  return out;
}

}  // namespace beatscribe
