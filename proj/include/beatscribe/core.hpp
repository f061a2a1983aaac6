#pragma once

// Shared domain types: pitches, notes, melodies, chords, keys and meters.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "beatscribe/errors.hpp"

namespace beatscribe {

/// Sixteenth-note subdivisions per notated beat.
inline constexpr int kTicksPerBeat = 4;

/// A piano-range pitch, A0 (21) through C8 (108).
class Pitch {
 public:
  static constexpr int kMin = 21;
  static constexpr int kMax = 108;
  static constexpr int kCount = kMax - kMin + 1;

  constexpr explicit Pitch(int midi) : midi_(midi) {
    if (midi < kMin || midi > kMax) {
      throw RangeError("MIDI pitch " + std::to_string(midi) + " outside 21..108");
    }
  }

  static constexpr bool valid(int midi) noexcept { return midi >= kMin && midi <= kMax; }

  constexpr int midi() const noexcept { return midi_; }
  constexpr int pitch_class() const noexcept { return midi_ % 12; }

  friend constexpr auto operator<=>(Pitch, Pitch) = default;

 private:
  int midi_;
};

class PitchClass {
 public:
  constexpr explicit PitchClass(int pc) : pc_(pc) {
    if (pc < 0 || pc > 11) throw RangeError("pitch class " + std::to_string(pc) + " outside 0..11");
  }

  /// Reduces any integer semitone count modulo 12.
  static constexpr PitchClass wrap(int semitones) noexcept {
    return PitchClass(((semitones % 12) + 12) % 12, 0);
  }

  constexpr int value() const noexcept { return pc_; }

  friend constexpr auto operator<=>(PitchClass, PitchClass) = default;

 private:
  constexpr PitchClass(int pc, int) noexcept : pc_(pc) {}
  int pc_;
};

/// A note on the sixteenth-note grid.
struct ScoreNote {
  int onset_ticks;
  int duration_ticks;
  Pitch pitch;

  friend bool operator==(const ScoreNote&, const ScoreNote&) = default;
};

/// A note in seconds.
struct PerfNote {
  double onset_s;
  double offset_s;
  Pitch pitch;

  friend bool operator==(const PerfNote&, const PerfNote&) = default;
};

namespace detail {

inline void check_note(const ScoreNote& n, std::size_t i) {
  if (n.onset_ticks < 0) {
    throw RangeError("note " + std::to_string(i) + " has negative onset");
  }
  if (n.duration_ticks < 1) {
    throw RangeError("note " + std::to_string(i) + " has duration < 1 tick");
  }
}

inline void check_note(const PerfNote& n, std::size_t i) {
  if (!(n.onset_s >= 0.0) || !(n.offset_s > n.onset_s)) {
    throw RangeError("note " + std::to_string(i) + " needs 0 <= onset < offset");
  }
}

inline double onset_of(const ScoreNote& n) { return n.onset_ticks; }
inline double onset_of(const PerfNote& n) { return n.onset_s; }

}  // namespace detail

/// Monophonic note sequence with strictly increasing onsets. Score-form
/// melodies additionally forbid a note from sounding past the next onset.
template <class Note>
class Melody {
 public:
  Melody() = default;

  explicit Melody(std::vector<Note> notes) : notes_(std::move(notes)) {
    for (std::size_t i = 0; i < notes_.size(); ++i) {
      detail::check_note(notes_[i], i);
      if (i == 0) continue;
      if (!(detail::onset_of(notes_[i - 1]) < detail::onset_of(notes_[i]))) {
        throw OrderingError("onset of note " + std::to_string(i) +
                            " does not follow the previous onset");
      }
      if constexpr (std::is_same_v<Note, ScoreNote>) {
        if (notes_[i - 1].onset_ticks + notes_[i - 1].duration_ticks > notes_[i].onset_ticks) {
          throw OrderingError("note " + std::to_string(i - 1) + " overlaps the next note");
        }
      }
    }
  }

  const std::vector<Note>& notes() const noexcept { return notes_; }
  std::size_t size() const noexcept { return notes_.size(); }
  bool empty() const noexcept { return notes_.empty(); }
  const Note& operator[](std::size_t i) const { return notes_[i]; }
  auto begin() const noexcept { return notes_.begin(); }
  auto end() const noexcept { return notes_.end(); }

  friend bool operator==(const Melody&, const Melody&) = default;

 private:
  std::vector<Note> notes_;
};

using ScoreMelody = Melody<ScoreNote>;
using PerfMelody = Melody<PerfNote>;

/// Shifts every pitch by `sigma` octaves; onsets are untouched.
template <class Note>
Melody<Note> octave_shift(const Melody<Note>& melody, int sigma) {
  std::vector<Note> out;
  out.reserve(melody.size());
  for (std::size_t i = 0; i < melody.size(); ++i) {
    Note n = melody[i];
    const int shifted = n.pitch.midi() + 12 * sigma;
    if (!Pitch::valid(shifted)) {
      throw RangeError("octave shift " + std::to_string(sigma) + " moves note " +
                       std::to_string(i) + " to MIDI " + std::to_string(shifted));
    }
    n.pitch = Pitch(shifted);
    out.push_back(n);
  }
  return Melody<Note>(std::move(out));
}

/// True when every pitch stays in range after shifting by `sigma` octaves.
template <class Note>
bool octave_shift_feasible(const Melody<Note>& melody, int sigma) noexcept {
  for (const auto& n : melody) {
    if (!Pitch::valid(n.pitch.midi() + 12 * sigma)) return false;
  }
  return true;
}

struct Onset {
  double onset_s;
  Pitch pitch;
};

/// Each note lasts until the next onset; the last note lasts until
/// `segment_end_s`.
inline PerfMelody legato_offsets(std::span<const Onset> onsets, double segment_end_s) {
  std::vector<PerfNote> notes;
  notes.reserve(onsets.size());
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    if (i > 0 && !(onsets[i - 1].onset_s < onsets[i].onset_s)) {
      throw OrderingError("onset " + std::to_string(i) + " is not after onset " +
                          std::to_string(i - 1));
    }
    if (!(onsets[i].onset_s < segment_end_s)) {
      throw InputError("onset " + std::to_string(i) + " is not before the segment end");
    }
  }
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    const double off = i + 1 < onsets.size() ? onsets[i + 1].onset_s : segment_end_s;
    notes.push_back({onsets[i].onset_s, off, onsets[i].pitch});
  }
  return PerfMelody(std::move(notes));
}

/// Octave count k such that mean(midis) + 12k is closest to middle C,
/// ties toward the lower octave. Zero for an empty input.
inline int canonical_octave_shift(std::span<const int> midis) {
  if (midis.empty()) return 0;
  double sum = 0.0;
  for (int m : midis) sum += m;
  const double mean = sum / static_cast<double>(midis.size());
  const int lo = static_cast<int>(std::floor((60.0 - mean) / 12.0));
  const double dlo = std::abs(mean + 12.0 * lo - 60.0);
  const double dhi = std::abs(mean + 12.0 * (lo + 1) - 60.0);
  return dhi < dlo ? lo + 1 : lo;
}

enum class ChordQuality : std::uint8_t { kMaj, kMin, kDim, kAug, kDom7, kMaj7, kMin7, kHdim7 };

inline constexpr int kChordQualityCount = 8;

inline constexpr std::array<std::string_view, kChordQualityCount> kChordQualityNames = {
    "maj", "min", "dim", "aug", "dom7", "maj7", "min7", "hdim7"};

inline std::string_view to_string(ChordQuality q) {
  return kChordQualityNames[static_cast<std::size_t>(q)];
}

inline std::optional<ChordQuality> chord_quality_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kChordQualityNames.size(); ++i) {
    if (kChordQualityNames[i] == s) return static_cast<ChordQuality>(i);
  }
  return std::nullopt;
}

/// Semitone offsets of the chord tones above the root.
inline std::vector<int> chord_intervals(ChordQuality q) {
  switch (q) {
    case ChordQuality::kMaj: return {0, 4, 7};
    case ChordQuality::kMin: return {0, 3, 7};
    case ChordQuality::kDim: return {0, 3, 6};
    case ChordQuality::kAug: return {0, 4, 8};
    case ChordQuality::kDom7: return {0, 4, 7, 10};
    case ChordQuality::kMaj7: return {0, 4, 7, 11};
    case ChordQuality::kMin7: return {0, 3, 7, 10};
    case ChordQuality::kHdim7: return {0, 3, 6, 10};
  }
  return {0, 4, 7};
}

struct ChordSymbol {
  PitchClass root;
  ChordQuality quality;

  friend bool operator==(const ChordSymbol&, const ChordSymbol&) = default;
};

/// A chord with its span on the tick grid.
struct TimedChord {
  int onset_ticks;
  int duration_ticks;
  ChordSymbol chord;

  friend bool operator==(const TimedChord&, const TimedChord&) = default;
};

enum class Mode : std::uint8_t { kMajor, kMinor };

inline std::string_view to_string(Mode m) { return m == Mode::kMajor ? "major" : "minor"; }

struct KeySignature {
  PitchClass tonic;
  Mode mode;

  friend bool operator==(const KeySignature&, const KeySignature&) = default;
};

inline constexpr std::array<int, 7> kMajorScale = {0, 2, 4, 5, 7, 9, 11};
inline constexpr std::array<int, 7> kNaturalMinorScale = {0, 2, 3, 5, 7, 8, 10};

inline const std::array<int, 7>& scale_offsets(Mode m) {
  return m == Mode::kMajor ? kMajorScale : kNaturalMinorScale;
}

class Meter {
 public:
  Meter(int beats_per_bar, int beat_unit) : beats_per_bar_(beats_per_bar), beat_unit_(beat_unit) {
    if (beats_per_bar < 1) throw RangeError("beats_per_bar must be >= 1");
    if (beat_unit != 1 && beat_unit != 2 && beat_unit != 4 && beat_unit != 8 && beat_unit != 16) {
      throw RangeError("beat_unit must be one of 1, 2, 4, 8, 16");
    }
  }

  int beats_per_bar() const noexcept { return beats_per_bar_; }
  int beat_unit() const noexcept { return beat_unit_; }
  int ticks_per_bar() const noexcept { return beats_per_bar_ * kTicksPerBeat; }

  /// 6/8, 9/8, 12/8 and similar; ticks still subdivide the notated beat by 4.
  bool compound() const noexcept {
    return beat_unit_ >= 8 && beats_per_bar_ > 3 && beats_per_bar_ % 3 == 0;
  }

  friend bool operator==(const Meter&, const Meter&) = default;

 private:
  int beats_per_bar_;
  int beat_unit_;
};

enum class Split : std::uint8_t { kTrain, kValid, kTest };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "train";
}

inline std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "valid") return Split::kValid;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

/// One annotated excerpt of a recording, in absolute pitches.
struct Segment {
  std::string id;
  std::string audio_ref;
  std::optional<Split> split;
  double user_start_s = 0.0;
  double user_end_s = 0.0;
  Meter meter{4, 4};
  KeySignature key{PitchClass(0), Mode::kMajor};
  ScoreMelody melody;
  std::vector<TimedChord> chords;

  /// Beat count B: the annotated content rounded up to whole bars.
  int num_beats() const {
    int end_ticks = 0;
    for (const auto& n : melody) end_ticks = std::max(end_ticks, n.onset_ticks + n.duration_ticks);
    for (const auto& c : chords) end_ticks = std::max(end_ticks, c.onset_ticks + c.duration_ticks);
    const int bar = meter.ticks_per_bar();
    const int bars = std::max(1, (end_ticks + bar - 1) / bar);
    return bars * meter.beats_per_bar();
  }

  friend bool operator==(const Segment&, const Segment&) = default;
};

}  // namespace beatscribe
