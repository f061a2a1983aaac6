#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "beatscribe/audio.hpp"

using namespace beatscribe;

namespace {

Audio tone(double freq, double rate, double seconds, double amp = 0.5) {
  Audio a;
  a.sample_rate_hz = rate;
  a.samples.resize(static_cast<std::size_t>(rate * seconds));
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    a.samples[i] = static_cast<float>(amp * std::sin(2.0 * std::numbers::pi * freq * i / rate));
  }
  return a;
}

}  // namespace

TEST(Wav, Float32RoundTripIsExact) {
  const Audio a = tone(440, 8000, 0.1);
  const Audio b = decode_wav(encode_wav(a, WavEncoding::kFloat32));
  EXPECT_EQ(b.sample_rate_hz, 8000);
  EXPECT_EQ(b.samples, a.samples);
}

TEST(Wav, Pcm16RoundTripWithinQuantization) {
  const Audio a = tone(440, 8000, 0.1);
  const Audio b = decode_wav(encode_wav(a));
  ASSERT_EQ(b.samples.size(), a.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_NEAR(b.samples[i], a.samples[i], 1.0 / 32768.0);
}

TEST(Wav, StereoIsAveraged) {
  std::vector<unsigned char> w{'R', 'I', 'F', 'F', 0, 0, 0, 0, 'W', 'A', 'V', 'E', 'f', 'm', 't', ' ', 16, 0, 0, 0,
                               1, 0, 2, 0, 0x40, 0x1F, 0, 0, 0, 0, 0, 0, 4, 0, 16, 0, 'd', 'a', 't', 'a', 4, 0, 0, 0,
                               0x00, 0x40, 0x00, 0x00};
  const Audio a = decode_wav(w);
  ASSERT_EQ(a.samples.size(), 1u);
  EXPECT_FLOAT_EQ(a.samples[0], 0.25f);
  EXPECT_EQ(a.sample_rate_hz, 8000);
}

TEST(Wav, RejectsGarbage) {
  const std::vector<unsigned char> junk{'n', 'o', 'p', 'e'};
  EXPECT_THROW(decode_wav(junk), FormatError);
  auto w = encode_wav(tone(100, 8000, 0.01));
  w.resize(w.size() - 10);
  EXPECT_THROW(decode_wav(w), FormatError);
}

TEST(Resample, PreservesToneAndLength) {
  const Audio a = tone(440, 44100, 0.5);
  const Audio b = resample(a, 16000);
  EXPECT_EQ(b.sample_rate_hz, 16000);
  EXPECT_NEAR(static_cast<double>(b.samples.size()), 8000.0, 1.0);
  double err = 0.0;
  for (std::size_t i = 200; i + 200 < b.samples.size(); ++i) {
    const double ref = 0.5 * std::sin(2.0 * std::numbers::pi * 440.0 * i / 16000.0);
    err = std::max(err, std::abs(b.samples[i] - ref));
  }
  EXPECT_LT(err, 0.01);
}

TEST(Resample, SameRateIsIdentity) {
  const Audio a = tone(300, 16000, 0.05);
  EXPECT_EQ(resample(a, 16000).samples, a.samples);
}
