#pragma once

// Key estimation from symbolic output, lead-sheet assembly and LilyPond
// text emission.

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "beatscribe/align.hpp"
#include "beatscribe/core.hpp"

namespace beatscribe {

inline constexpr std::array<double, 12> kKrumhanslMajor = {6.35, 2.23, 3.48, 2.33, 4.38, 4.09,
                                                            2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
inline constexpr std::array<double, 12> kKrumhanslMinor = {6.33, 2.68, 3.52, 5.38, 2.60, 3.53,
                                                            2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

/// Duration-weighted pitch-class histogram; chord tones count at the
/// chord's full duration.
inline std::array<double, 12> pitch_class_histogram(const ScoreMelody& melody, std::span<const TimedChord> chords) {
  std::array<double, 12> h{};
  for (const auto& n : melody) h[static_cast<std::size_t>(n.pitch.pitch_class())] += n.duration_ticks;
  for (const auto& c : chords) {
    for (int iv : chord_intervals(c.chord.quality)) {
      h[static_cast<std::size_t>((c.chord.root.value() + iv) % 12)] += c.duration_ticks;
    }
  }
  return h;
}

/// Pearson correlation of the histogram read from `tonic` upward against a
/// profile. Reading in rotated order keeps the arithmetic identical under
/// transposition.
inline double key_correlation(const std::array<double, 12>& hist, int tonic, const std::array<double, 12>& profile) {
  std::array<double, 12> x{};
  for (int i = 0; i < 12; ++i) x[static_cast<std::size_t>(i)] = hist[static_cast<std::size_t>((tonic + i) % 12)];
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < 12; ++i) {
    mx += x[static_cast<std::size_t>(i)];
    my += profile[static_cast<std::size_t>(i)];
  }
  mx /= 12.0;
  my /= 12.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < 12; ++i) {
    const double dx = x[i] - mx;
    const double dy = profile[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Krumhansl-Schmuckler: the best-correlated of the 24 rotated profiles.
/// Ties go to the lower tonic, then major.
inline KeySignature ks_key(const ScoreMelody& melody, std::span<const TimedChord> chords) {
  if (melody.empty() && chords.empty()) throw InputError("key estimation needs at least one note or chord");
  const auto hist = pitch_class_histogram(melody, chords);
  KeySignature best{PitchClass(0), Mode::kMajor};
  double best_r = -2.0;
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (Mode mode : {Mode::kMajor, Mode::kMinor}) {
      const double r = key_correlation(hist, tonic, mode == Mode::kMajor ? kKrumhanslMajor : kKrumhanslMinor);
      if (r > best_r) {
        best_r = r;
        best = {PitchClass(tonic), mode};
      }
    }
  }
  return best;
}

struct LeadSheet {
  KeySignature key{PitchClass(0), Mode::kMajor};
  Meter meter{4, 4};
  double tempo_bpm = 120.0;
  ScoreMelody melody;
  std::vector<TimedChord> chords;
  int pickup_ticks = 0;
  int num_ticks = 0;

  friend bool operator==(const LeadSheet&, const LeadSheet&) = default;
};

/// Combines decoded tracks with the key and meter. Tick 0 is a downbeat, so
/// there is no pickup.
inline LeadSheet assemble(const ScoreMelody& melody, std::vector<TimedChord> chords, KeySignature key, Meter meter,
                          const AlignmentMap& map) {
  const int n_ticks = map.num_ticks();
  for (const auto& n : melody) {
    if (n.onset_ticks + n.duration_ticks > n_ticks) {
      throw InputError("melody note at tick " + std::to_string(n.onset_ticks) + " runs past tick " +
                       std::to_string(n_ticks));
    }
  }
  for (std::size_t i = 0; i < chords.size(); ++i) {
    const auto& c = chords[i];
    if (c.onset_ticks < 0 || c.duration_ticks < 1 || c.onset_ticks + c.duration_ticks > n_ticks) {
      throw InputError("chord " + std::to_string(i) + " lies outside the piece");
    }
    if (i > 0 && !(chords[i - 1].onset_ticks < c.onset_ticks)) throw InputError("chord onsets must strictly increase");
  }
  LeadSheet s;
  s.key = key;
  s.meter = meter;
  s.melody = melody;
  s.chords = std::move(chords);
  s.num_ticks = n_ticks;
  const double span = align(map, map.num_beats()) - align(map, 0.0);
  s.tempo_bpm = 60.0 * map.num_beats() / span;
  return s;
}

namespace detail {

inline constexpr std::array<int, 7> kLetterPc = {0, 2, 4, 5, 7, 9, 11};  // c d e f g a b
inline constexpr std::array<char, 7> kLetters = {'c', 'd', 'e', 'f', 'g', 'a', 'b'};

struct Spelling {
  int letter;      // 0..6
  int accidental;  // -2..2
};

/// Position on the circle of fifths of the key signature, -5..6.
inline int key_fifths(KeySignature key) {
  const int major_tonic = key.mode == Mode::kMajor ? key.tonic.value() : (key.tonic.value() + 3) % 12;
  const int f = (major_tonic * 7) % 12;
  return f > 6 ? f - 12 : f;
}

inline Spelling spell_chromatic(int pc, bool sharps) {
  for (int l = 0; l < 7; ++l) {
    if (kLetterPc[static_cast<std::size_t>(l)] == pc) return {l, 0};
  }
  // Not a natural: sharpen the natural below or flatten the one above.
  for (int l = 0; l < 7; ++l) {
    if (sharps && kLetterPc[static_cast<std::size_t>(l)] == (pc + 11) % 12) return {l, 1};
    if (!sharps && kLetterPc[static_cast<std::size_t>(l)] == (pc + 1) % 12) return {l, -1};
  }
  return {0, 0};
}

/// Spellings of all twelve pitch classes in `key`: scale tones follow the
/// key's letters, the rest use sharps in sharp keys and flats in flat keys.
inline std::array<Spelling, 12> key_spellings(KeySignature key) {
  const bool sharps = key_fifths(key) >= 0;
  std::array<Spelling, 12> out{};
  for (int pc = 0; pc < 12; ++pc) out[static_cast<std::size_t>(pc)] = spell_chromatic(pc, sharps);
  // The tonic follows the signature's accidental direction (F# major, Bb major, D# minor, ...).
  const int major_tonic = key.mode == Mode::kMajor ? key.tonic.value() : (key.tonic.value() + 3) % 12;
  const Spelling major_tonic_sp = spell_chromatic(major_tonic, sharps);
  const auto& scale = kMajorScale;
  for (int d = 0; d < 7; ++d) {
    const int pc = (major_tonic + scale[static_cast<std::size_t>(d)]) % 12;
    const int letter = (major_tonic_sp.letter + d) % 7;
    int acc = pc - kLetterPc[static_cast<std::size_t>(letter)];
    if (acc > 6) acc -= 12;
    if (acc < -6) acc += 12;
    out[static_cast<std::size_t>(pc)] = {letter, acc};
  }
  return out;
}

inline std::string note_name(Spelling s) {
  std::string name(1, kLetters[static_cast<std::size_t>(s.letter)]);
  for (int i = 0; i < s.accidental; ++i) name += "is";
  for (int i = 0; i < -s.accidental; ++i) {
    if (i == 0 && (name == "e" || name == "a")) name += "s";
    else name += "es";
  }
  return name;
}

/// Absolute LilyPond pitch: c' is middle C.
inline std::string pitch_token(Pitch p, const std::array<Spelling, 12>& sp) {
  const Spelling s = sp[static_cast<std::size_t>(p.pitch_class())];
  const int octave = (p.midi() - s.accidental - kLetterPc[static_cast<std::size_t>(s.letter)]) / 12 - 1;
  std::string out = note_name(s);
  for (int o = 3; o < octave; ++o) out += '\'';
  for (int o = octave; o < 3; ++o) out += ',';
  return out;
}

/// Splits `ticks` into note values (plain or dotted), largest first. A tick
/// is a 1/(4 * beat_unit) note.
inline std::vector<std::string> duration_tokens(int ticks, int beat_unit) {
  const int whole = 4 * beat_unit;
  std::vector<std::pair<int, std::string>> values;
  for (int t = whole; t >= 1; t /= 2) {
    const std::string base = std::to_string(whole / t);
    if (t >= 2 && t + t / 2 <= whole) values.push_back({t + t / 2, base + "."});
    values.push_back({t, base});
  }
  std::vector<std::string> out;
  while (ticks > 0) {
    for (const auto& [t, tok] : values) {
      if (t <= ticks) {
        out.push_back(tok);
        ticks -= t;
        break;
      }
    }
  }
  return out;
}

/// Cuts [start, end) at barlines.
inline std::vector<std::pair<int, int>> bar_pieces(int start, int end, int bar_ticks, int pickup) {
  std::vector<std::pair<int, int>> out;
  while (start < end) {
    const int rel = start - pickup;
    int next_bar = pickup + (rel < 0 ? 0 : (rel / bar_ticks + 1) * bar_ticks);
    if (next_bar <= start) next_bar = start + bar_ticks;
    const int stop = std::min(end, next_bar);
    out.push_back({start, stop});
    start = stop;
  }
  return out;
}

inline std::string chord_suffix(ChordQuality q) {
  switch (q) {
    case ChordQuality::kMaj: return "";
    case ChordQuality::kMin: return ":m";
    case ChordQuality::kDim: return ":dim";
    case ChordQuality::kAug: return ":aug";
    case ChordQuality::kDom7: return ":7";
    case ChordQuality::kMaj7: return ":maj7";
    case ChordQuality::kMin7: return ":m7";
    case ChordQuality::kHdim7: return ":m7.5-";
  }
  return "";
}

class TokenLine {
 public:
  void add(const std::string& tok) {
    if (count_ > 0) out_ << (count_ % 8 == 0 ? "\n  " : " ");
    out_ << tok;
    ++count_;
  }
  std::string str() const { return count_ == 0 ? std::string() : "  " + out_.str() + "\n"; }

 private:
  std::ostringstream out_;
  int count_ = 0;
};

}  // namespace detail

/// LilyPond source for the sheet: a ChordNames line over a single staff.
/// Notes and rests are cut at barlines and tied across them.
inline std::string emit_lilypond(const LeadSheet& sheet) {
  using namespace detail;
  const auto sp = key_spellings(sheet.key);
  const int bar = sheet.meter.ticks_per_bar();
  const int unit = sheet.meter.beat_unit();
  const int end = sheet.num_ticks;

  TokenLine melody;
  auto emit_span = [&](int start, int stop, const std::string& head, bool tie) {
    const auto pieces = bar_pieces(start, stop, bar, sheet.pickup_ticks);
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      const auto toks = duration_tokens(pieces[p].second - pieces[p].first, unit);
      for (std::size_t k = 0; k < toks.size(); ++k) {
        const bool last = p + 1 == pieces.size() && k + 1 == toks.size();
        melody.add(head + toks[k] + (tie && !last ? "~" : ""));
      }
    }
  };
  int cursor = 0;
  for (const auto& n : sheet.melody) {
    if (n.onset_ticks > cursor) emit_span(cursor, n.onset_ticks, "r", false);
    emit_span(n.onset_ticks, n.onset_ticks + n.duration_ticks, pitch_token(n.pitch, sp), true);
    cursor = n.onset_ticks + n.duration_ticks;
  }
  if (cursor < end) emit_span(cursor, end, "r", false);

  TokenLine chords;
  int ccur = 0;
  for (const auto& c : sheet.chords) {
    if (c.onset_ticks > ccur) {
      for (const auto& [a, b] : bar_pieces(ccur, c.onset_ticks, bar, sheet.pickup_ticks)) {
        for (const auto& tok : duration_tokens(b - a, unit)) chords.add("s" + tok);
      }
    }
    const std::string root = note_name(sp[static_cast<std::size_t>(c.chord.root.value())]);
    bool named = false;
    for (const auto& [a, b] : bar_pieces(c.onset_ticks, c.onset_ticks + c.duration_ticks, bar, sheet.pickup_ticks)) {
      for (const auto& tok : duration_tokens(b - a, unit)) {
        chords.add(named ? "s" + tok : root + tok + chord_suffix(c.chord.quality));
        named = true;
      }
    }
    ccur = c.onset_ticks + c.duration_ticks;
  }

  std::ostringstream out;
  out << "\\version \"2.22.0\"\n\n";
  out << "melody = {\n";
  out << "  \\clef treble\n";
  out << "  \\key " << note_name(sp[static_cast<std::size_t>(sheet.key.tonic.value())])
      << (sheet.key.mode == Mode::kMajor ? " \\major" : " \\minor") << "\n";
  out << "  \\time " << sheet.meter.beats_per_bar() << "/" << unit << "\n";
  out << "  \\tempo " << unit << " = " << static_cast<long>(std::lround(sheet.tempo_bpm)) << "\n";
  out << melody.str();
  out << "}\n\n";
  out << "harmonies = \\chordmode {\n" << chords.str() << "}\n\n";
  out << "\\score {\n";
  out << "  <<\n";
  out << "    \\new ChordNames \\harmonies\n";
  out << "    \\new Staff \\melody\n";
  out << "  >>\n";
  out << "  \\layout { }\n";
  out << "}\n";
  return out.str();
}

}  // namespace beatscribe
