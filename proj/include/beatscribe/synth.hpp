#pragma once

// Synthetic sine-tone melodies at constant tempo, with the score, beat grid
// and audio needed to exercise the whole pipeline.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "beatscribe/align.hpp"
#include "beatscribe/audio.hpp"
#include "beatscribe/core.hpp"

namespace beatscribe {

struct SynthOptions {
  double sample_rate_hz = 16000.0;
  double min_bpm = 60.0;
  double max_bpm = 180.0;
  int min_bars = 2;
  int max_bars = 4;
  int lowest_midi = 60;
  int highest_midi = 84;
  double rest_probability = 0.15;
  double release_s = 0.03;
  double amplitude = 0.3;
};

struct SynthSegment {
  Segment segment;
  Audio audio;
  BeatGrid grid{{0.0}, {true}};
  double bpm = 120.0;
};

/// One random 4/4 melody in a random key. Onsets fall on sixteenths; notes
/// are diatonic and move by small steps.
template <class Rng>
SynthSegment synth_segment(Rng& rng, const std::string& id, const SynthOptions& opt = {}) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

  SynthSegment out;
  out.bpm = opt.min_bpm + (opt.max_bpm - opt.min_bpm) * unit(rng);
  const double period = 60.0 / out.bpm;
  const KeySignature key{PitchClass(uniform_int(0, 11)), uniform_int(0, 1) == 0 ? Mode::kMajor : Mode::kMinor};
  const int bars = uniform_int(opt.min_bars, opt.max_bars);
  const int beats = bars * 4;
  const int n_ticks = beats * kTicksPerBeat;

  std::vector<int> scale;
  for (int m = opt.lowest_midi; m <= opt.highest_midi; ++m) {
    const int rel = ((m - key.tonic.value()) % 12 + 12) % 12;
    for (int o : scale_offsets(key.mode)) {
      if (o == rel) scale.push_back(m);
    }
  }
  static constexpr int kDurations[] = {1, 2, 2, 3, 4, 4, 4, 6, 8};
  std::vector<ScoreNote> notes;
  int idx = uniform_int(0, static_cast<int>(scale.size()) - 1);
  int tick = 0;
  while (tick < n_ticks) {
    int dur = kDurations[uniform_int(0, 8)];
    dur = std::min(dur, n_ticks - tick);
    if (unit(rng) < opt.rest_probability && tick > 0) {
      tick += dur;
      continue;
    }
    idx = std::clamp(idx + uniform_int(-3, 3), 0, static_cast<int>(scale.size()) - 1);
    notes.push_back({tick, dur, Pitch(scale[static_cast<std::size_t>(idx)])});
    tick += dur;
  }
  // The last bar must contain content so that the segment keeps its length.
  if (notes.empty() || notes.back().onset_ticks + notes.back().duration_ticks <= n_ticks - 16) {
    notes.push_back({n_ticks - 4, 4, Pitch(scale[static_cast<std::size_t>(idx)])});
  }

  const double lead_in = 0.25 + 0.75 * unit(rng);
  out.segment.id = id;
  out.segment.audio_ref = id + ".wav";
  out.segment.meter = Meter(4, 4);
  out.segment.key = key;
  out.segment.melody = ScoreMelody(notes);
  out.segment.user_start_s = std::max(0.0, lead_in + 0.2 * period * (unit(rng) - 0.5));
  out.segment.user_end_s = lead_in + beats * period;

  out.grid = constant_tempo_grid(out.bpm, lead_in, beats + 4, 4);

  const double total_s = lead_in + (beats + 1) * period;
  out.audio.sample_rate_hz = opt.sample_rate_hz;
  out.audio.samples.assign(static_cast<std::size_t>(std::ceil(total_s * opt.sample_rate_hz)), 0.0f);
  const double tick_s = period / kTicksPerBeat;
  for (const auto& n : notes) {
    const double f = 440.0 * std::pow(2.0, (n.pitch.midi() - 69) / 12.0);
    const double on = lead_in + n.onset_ticks * tick_s;
    const double len = std::max(0.02, n.duration_ticks * tick_s - opt.release_s);
    const auto s0 = static_cast<std::size_t>(std::llround(on * opt.sample_rate_hz));
    const auto count = static_cast<std::size_t>(std::llround(len * opt.sample_rate_hz));
    for (std::size_t k = 0; k < count && s0 + k < out.audio.samples.size(); ++k) {
      const double t = k / opt.sample_rate_hz;
      const double env = std::min(1.0, t / 0.005) * std::exp(-2.0 * t) * std::min(1.0, (len - t) / 0.005);
      out.audio.samples[s0 + k] += static_cast<float>(opt.amplitude * env * std::sin(2.0 * std::numbers::pi * f * t));
    }
  }
  return out;
}

/// `count` segments from one seed; ids are "synth-0000", ...
inline std::vector<SynthSegment> synth_dataset(int count, std::uint64_t seed, const SynthOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::vector<SynthSegment> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    std::string id = std::to_string(i);
    id = "synth-" + std::string(4 - std::min<std::size_t>(4, id.size()), '0') + id;
    out.push_back(synth_segment(rng, id, opt));
  }
  return out;
}

}  // namespace beatscribe
