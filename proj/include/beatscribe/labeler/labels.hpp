#pragma once

// Label vocabularies, dense per-tick targets and the octave-tolerant
// cross-entropy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "beatscribe/core.hpp"
#include "beatscribe/matrix.hpp"

namespace beatscribe {

/// Class 0 is "no onset". Melody classes 1..88 are A0..C8; chord classes
/// 1..96 are root * 8 + quality + 1.
enum class Vocabulary : std::uint8_t { kMelody, kChord };

inline constexpr int kNoOnset = 0;
inline constexpr int kMelodyClasses = Pitch::kCount + 1;
inline constexpr int kChordClasses = 12 * kChordQualityCount + 1;

inline int num_classes(Vocabulary v) { return v == Vocabulary::kMelody ? kMelodyClasses : kChordClasses; }

inline std::string_view to_string(Vocabulary v) { return v == Vocabulary::kMelody ? "melody" : "chord"; }

inline int pitch_class_id(Pitch p) { return p.midi() - Pitch::kMin + 1; }
inline Pitch pitch_from_class_id(int c) { return Pitch(c - 1 + Pitch::kMin); }

inline int chord_class_id(const ChordSymbol& c) {
  return c.root.value() * kChordQualityCount + static_cast<int>(c.quality) + 1;
}

inline ChordSymbol chord_from_class_id(int c) {
  return {PitchClass((c - 1) / kChordQualityCount), static_cast<ChordQuality>((c - 1) % kChordQualityCount)};
}

/// One class id per sixteenth-note tick.
struct DenseLabelSequence {
  Vocabulary vocab = Vocabulary::kMelody;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }

  friend bool operator==(const DenseLabelSequence&, const DenseLabelSequence&) = default;
};

/// A melody note positioned in (possibly fractional) beats.
struct BeatNote {
  double onset_beats;
  Pitch pitch;
};

struct DensifyResult {
  DenseLabelSequence labels;
  int collisions = 0;
};

/// Nearest tick to `onset_beats`, exact halves rounding down.
inline int quantize_to_tick(double onset_beats) {
  const double x = onset_beats * kTicksPerBeat;
  const double f = std::floor(x);
  return static_cast<int>(x - f > 0.5 ? f + 1 : f);
}

/// Places each onset on its nearest tick. When two notes land on one tick
/// the note closer to the tick wins (ties: earlier note) and a collision is
/// counted.
inline DensifyResult densify(std::span<const BeatNote> notes, int num_beats) {
  if (num_beats < 1) throw InputError("num_beats must be >= 1");
  const int n_ticks = num_beats * kTicksPerBeat;
  DensifyResult out;
  out.labels.vocab = Vocabulary::kMelody;
  out.labels.labels.assign(static_cast<std::size_t>(n_ticks), kNoOnset);
  std::vector<double> owner_dist(out.labels.labels.size(), std::numeric_limits<double>::infinity());
  std::vector<double> owner_onset(out.labels.labels.size(), 0.0);
  for (std::size_t i = 0; i < notes.size(); ++i) {
    const double b = notes[i].onset_beats;
    if (!(b >= 0.0 && b < num_beats)) {
      throw RangeError("onset " + std::to_string(b) + " beats outside [0, " + std::to_string(num_beats) + ")");
    }
    // A note at the very end of the last beat can round onto tick 4B.
    const int tick = std::min(quantize_to_tick(b), n_ticks - 1);
    const auto t = static_cast<std::size_t>(tick);
    const double dist = std::abs(b * kTicksPerBeat - tick);
    if (out.labels.labels[t] != kNoOnset) {
      ++out.collisions;
      const bool nearer = dist < owner_dist[t] || (dist == owner_dist[t] && b < owner_onset[t]);
      if (!nearer) continue;
    }
    out.labels.labels[t] = pitch_class_id(notes[i].pitch);
    owner_dist[t] = dist;
    owner_onset[t] = b;
  }
  return out;
}

inline DenseLabelSequence densify(const ScoreMelody& melody, int num_beats) {
  std::vector<BeatNote> notes;
  notes.reserve(melody.size());
  for (const auto& n : melody) notes.push_back({static_cast<double>(n.onset_ticks) / kTicksPerBeat, n.pitch});
  return densify(notes, num_beats).labels;
}

/// Chord onsets on the tick grid.
inline DenseLabelSequence densify_chords(std::span<const TimedChord> chords, int num_beats) {
  if (num_beats < 1) throw InputError("num_beats must be >= 1");
  DenseLabelSequence out;
  out.vocab = Vocabulary::kChord;
  out.labels.assign(static_cast<std::size_t>(num_beats * kTicksPerBeat), kNoOnset);
  for (const auto& c : chords) {
    if (c.onset_ticks < 0 || c.onset_ticks >= num_beats * kTicksPerBeat) {
      throw RangeError("chord onset tick " + std::to_string(c.onset_ticks) + " outside the segment");
    }
    out.labels[static_cast<std::size_t>(c.onset_ticks)] = chord_class_id(c.chord);
  }
  return out;
}

/// Labels with every pitch moved by `sigma` octaves; false if any leaves
/// the vocabulary.
inline bool shift_labels(std::span<const int> labels, int sigma, std::vector<int>& out) {
  out.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoOnset) {
      out[i] = kNoOnset;
      continue;
    }
    const int c = labels[i] + 12 * sigma;
    if (c < 1 || c > Pitch::kCount) return false;
    out[i] = c;
  }
  return true;
}

inline DenseLabelSequence octave_shift(const DenseLabelSequence& seq, int sigma) {
  if (seq.vocab != Vocabulary::kMelody) throw InputError("only melody labels can be octave shifted");
  DenseLabelSequence out{seq.vocab, {}};
  if (!shift_labels(seq.labels, sigma, out.labels)) throw RangeError("octave shift leaves the pitch range");
  return out;
}

/// Row-wise softmax.
template <class T>
Matrix<T> softmax_rows(const Matrix<T>& logits) {
  Matrix<T> p(logits.rows, logits.cols);
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const auto z = logits.row(i);
    const T mx = *std::max_element(z.begin(), z.end());
    T sum = 0;
    for (std::size_t c = 0; c < z.size(); ++c) sum += (p(i, c) = std::exp(z[c] - mx));
    for (std::size_t c = 0; c < z.size(); ++c) p(i, c) /= sum;
  }
  return p;
}

template <class T>
struct LossResult {
  T loss = 0;
  int sigma = 0;
};

/// Mean per-tick cross-entropy, minimized over whole-octave relabelings of
/// the target. Every shift in -8..8 that keeps all pitches in the
/// vocabulary is tried in the order 0, -1, +1, -2, ...; ties keep the
/// earlier shift. Chord labels are never shifted. Optionally writes the
/// gradient of the selected branch with respect to the logits.
template <class T>
LossResult<T> octave_tolerant_loss(const Matrix<T>& logits, const DenseLabelSequence& labels,
                                   Matrix<T>* grad = nullptr) {
  if (logits.rows != labels.size()) {
    throw ShapeError("logits have " + std::to_string(logits.rows) + " rows, labels " +
                     std::to_string(labels.size()));
  }
  if (static_cast<int>(logits.cols) != num_classes(labels.vocab)) throw ShapeError("logit width does not match vocabulary");
  if (logits.rows == 0) throw InputError("empty sequence");
  const std::size_t n = logits.rows;
  std::vector<T> lse(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = logits.row(i);
    const T mx = *std::max_element(z.begin(), z.end());
    T s = 0;
    for (T v : z) s += std::exp(v - mx);
    lse[i] = mx + std::log(s);
  }
  auto mean_ce = [&](std::span<const int> target) {
    T sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += lse[i] - logits(i, static_cast<std::size_t>(target[i]));
    return sum / static_cast<T>(n);
  };

  LossResult<T> best{mean_ce(labels.labels), 0};
  std::vector<int> best_target = labels.labels;
  if (labels.vocab == Vocabulary::kMelody) {
    std::vector<int> shifted;
    for (int k = 1; k <= 8; ++k) {
      for (int sigma : {-k, k}) {
        if (!shift_labels(labels.labels, sigma, shifted)) continue;
        const T l = mean_ce(shifted);
        if (l < best.loss) {
          best = {l, sigma};
          best_target = shifted;
        }
      }
    }
  }
  if (grad != nullptr) {
    *grad = Matrix<T>(n, logits.cols);
    const T scale = T(1) / static_cast<T>(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < logits.cols; ++c) (*grad)(i, c) = std::exp(logits(i, c) - lse[i]) * scale;
      (*grad)(i, static_cast<std::size_t>(best_target[i])) -= scale;
    }
  }
  return best;
}

}  // namespace beatscribe
