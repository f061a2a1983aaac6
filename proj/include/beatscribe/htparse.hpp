#pragma once

// Functional (scale-degree / roman-numeral) annotations and their conversion
// to the absolute segment format. Also the artist-stratified split.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "beatscribe/core.hpp"

namespace beatscribe {

/// A non-negative beat count in quarter-note units; `den` is 1, 2 or 4.
struct BeatFraction {
  int num = 0;
  int den = 1;

  int ticks() const { return num * (kTicksPerBeat / den); }
};

struct FunctionalNote {
  int scale_degree = 1;  // 1..7
  int accidental = 0;    // -2..+2
  int rel_octave = 0;
  BeatFraction onset_beats;
  BeatFraction duration_beats{1, 1};
};

enum class ChordMarker : std::uint8_t { kTriad, kSeventh };

struct FunctionalChord {
  int degree = 1;  // 1..7
  int accidental = 0;
  ChordMarker marker = ChordMarker::kTriad;
  std::optional<Mode> borrowed_mode;
  BeatFraction onset_beats;
  BeatFraction duration_beats{1, 1};
};

/// Pitch before melody-level octave canonicalization. May be out of range.
inline int degree_to_midi_raw(const KeySignature& key, const FunctionalNote& fn) {
  if (fn.scale_degree < 1 || fn.scale_degree > 7) {
    throw RangeError("scale degree " + std::to_string(fn.scale_degree) + " outside 1..7");
  }
  return 60 + key.tonic.value() + scale_offsets(key.mode)[fn.scale_degree - 1] + fn.accidental +
         12 * fn.rel_octave;
}

inline Pitch degree_to_pitch(const KeySignature& key, const FunctionalNote& fn) {
  return Pitch(degree_to_midi_raw(key, fn));
}

namespace detail {

using Q = ChordQuality;
inline constexpr std::array<Q, 7> kMajorTriads = {Q::kMaj, Q::kMin, Q::kMin, Q::kMaj,
                                                  Q::kMaj, Q::kMin, Q::kDim};
inline constexpr std::array<Q, 7> kMinorTriads = {Q::kMin, Q::kDim, Q::kMaj, Q::kMin,
                                                  Q::kMin, Q::kMaj, Q::kMaj};
inline constexpr std::array<Q, 7> kMajorSevenths = {Q::kMaj7, Q::kMin7, Q::kMin7, Q::kMaj7,
                                                    Q::kDom7, Q::kMin7, Q::kHdim7};
inline constexpr std::array<Q, 7> kMinorSevenths = {Q::kMin7, Q::kHdim7, Q::kMaj7, Q::kMin7,
                                                    Q::kMin7, Q::kMaj7, Q::kDom7};

}  // namespace detail

/// Diatonic chord on `fc.degree` of the key, or of the borrowed mode when set.
inline ChordSymbol roman_to_chord(const KeySignature& key, const FunctionalChord& fc) {
  if (fc.degree < 1 || fc.degree > 7) {
    throw ParseError("degree", "roman numeral degree " + std::to_string(fc.degree) +
                                   " outside 1..7");
  }
  const Mode mode = fc.borrowed_mode.value_or(key.mode);
  const auto i = static_cast<std::size_t>(fc.degree - 1);
  const PitchClass root =
      PitchClass::wrap(key.tonic.value() + scale_offsets(mode)[i] + fc.accidental);
  ChordQuality q;
  if (fc.marker == ChordMarker::kTriad) {
    q = mode == Mode::kMajor ? detail::kMajorTriads[i] : detail::kMinorTriads[i];
  } else {
    q = mode == Mode::kMajor ? detail::kMajorSevenths[i] : detail::kMinorSevenths[i];
  }
  return {root, q};
}

namespace detail {

using nlohmann::json;

/// JSON object cursor that remembers where it is, for error messages.
class Cursor {
 public:
  Cursor(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(path_.empty() ? "/" : path_, "expected an object");
  }

  void allow_only(std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, v] : j_.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        throw ParseError(path_ + "/" + k, "unknown field");
      }
    }
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& at(const std::string& key) const {
    if (!j_.contains(key)) throw ParseError(path_ + "/" + key, "missing field");
    return j_.at(key);
  }

  std::string path(const std::string& key) const { return path_ + "/" + key; }

  std::int64_t integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ParseError(path(key), "expected an integer");
    return v.get<std::int64_t>();
  }

  double number(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ParseError(path(key), "expected a number");
    return v.get<double>();
  }

  std::string string(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ParseError(path(key), "expected a string");
    return v.get<std::string>();
  }

  const json& array(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_array()) throw ParseError(path(key), "expected an array");
    return v;
  }

  Cursor object(const std::string& key) const { return Cursor(at(key), path(key)); }

 private:
  const json& j_;
  std::string path_;
};

inline int checked_int(const Cursor& c, const std::string& key, int lo, int hi) {
  const auto v = c.integer(key);
  if (v < lo || v > hi) {
    throw ParseError(c.path(key), "value " + std::to_string(v) + " outside " +
                                      std::to_string(lo) + ".." + std::to_string(hi));
  }
  return static_cast<int>(v);
}

inline BeatFraction parse_fraction(const Cursor& c, const std::string& key, bool positive) {
  const Cursor f = c.object(key);
  f.allow_only({"num", "den"});
  BeatFraction out;
  out.num = checked_int(f, "num", positive ? 1 : 0, 1 << 20);
  out.den = checked_int(f, "den", 1, 4);
  if (out.den == 3) throw ParseError(c.path(key) + "/den", "denominator must divide 4");
  return out;
}

inline Mode parse_mode(const Cursor& c, const std::string& key) {
  const std::string s = c.string(key);
  if (s == "major") return Mode::kMajor;
  if (s == "minor") return Mode::kMinor;
  throw ParseError(c.path(key), "unsupported mode '" + s + "'");
}

inline Meter parse_meter(const Cursor& c) {
  c.allow_only({"beats_per_bar", "beat_unit"});
  const int bpb = checked_int(c, "beats_per_bar", 1, 64);
  const int unit = checked_int(c, "beat_unit", 1, 16);
  try {
    return Meter(bpb, unit);
  } catch (const RangeError& e) {
    throw ParseError(c.path("beat_unit"), e.what());
  }
}

}  // namespace detail

/// A parsed segment plus non-fatal notices (e.g. compound meter).
struct ParsedSegment {
  Segment segment;
  std::vector<std::string> warnings;
};

/// Parses one functional annotation (documented in README.md) into an
/// absolute segment. The melody is shifted by whole octaves so its mean
/// pitch sits nearest middle C. The split is left unset.
inline ParsedSegment parse_segment_verbose(std::string_view bytes) {
  using detail::checked_int;
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("malformed JSON: ") + e.what());
  }
  const detail::Cursor root(doc, "");
  root.allow_only({"id", "audio_ref", "artist", "user_start_s", "user_end_s", "meter", "key",
                   "notes", "chords", "key_changes", "meter_changes"});

  ParsedSegment out;
  Segment& seg = out.segment;
  seg.id = root.string("id");
  seg.audio_ref = root.string("audio_ref");
  seg.user_start_s = root.number("user_start_s");
  seg.user_end_s = root.number("user_end_s");
  if (!(seg.user_start_s < seg.user_end_s)) {
    throw ParseError("/user_end_s", "user_end_s must exceed user_start_s");
  }
  seg.meter = detail::parse_meter(root.object("meter"));
  if (seg.meter.compound()) {
    out.warnings.push_back("compound meter " + std::to_string(seg.meter.beats_per_bar()) + "/" +
                           std::to_string(seg.meter.beat_unit()) +
                           " subdivided as 4 ticks per notated beat");
  }
  {
    const detail::Cursor k = root.object("key");
    k.allow_only({"tonic_pc", "mode"});
    seg.key = KeySignature{PitchClass(checked_int(k, "tonic_pc", 0, 11)), detail::parse_mode(k, "mode")};
  }
  for (const char* field : {"key_changes", "meter_changes"}) {
    if (root.has(field) && !root.array(field).empty()) {
      throw ParseError(std::string("/") + field, "segments with mid-segment changes are not supported");
    }
  }

  std::vector<int> raw_midi;
  std::vector<std::pair<int, int>> spans;
  if (root.has("notes")) {
    const auto& notes = root.array("notes");
    for (std::size_t i = 0; i < notes.size(); ++i) {
      const detail::Cursor n(notes[i], "/notes/" + std::to_string(i));
      n.allow_only({"scale_degree", "accidental", "rel_octave", "onset_beats", "duration_beats"});
      FunctionalNote fn;
      fn.scale_degree = checked_int(n, "scale_degree", 1, 7);
      fn.accidental = checked_int(n, "accidental", -2, 2);
      fn.rel_octave = checked_int(n, "rel_octave", -10, 10);
      fn.onset_beats = detail::parse_fraction(n, "onset_beats", false);
      fn.duration_beats = detail::parse_fraction(n, "duration_beats", true);
      raw_midi.push_back(degree_to_midi_raw(seg.key, fn));
      spans.emplace_back(fn.onset_beats.ticks(), fn.duration_beats.ticks());
    }
  }
  const int shift = 12 * canonical_octave_shift(raw_midi);
  std::vector<ScoreNote> notes;
  for (std::size_t i = 0; i < raw_midi.size(); ++i) {
    const int midi = raw_midi[i] + shift;
    if (!Pitch::valid(midi)) {
      throw ParseError("/notes/" + std::to_string(i),
                       "pitch " + std::to_string(midi) + " outside 21..108 after octave centering");
    }
    notes.push_back({spans[i].first, spans[i].second, Pitch(midi)});
  }
  try {
    seg.melody = ScoreMelody(std::move(notes));
  } catch (const Error& e) {
    throw ParseError("/notes", e.what());
  }

  if (root.has("chords")) {
    const auto& chords = root.array("chords");
    for (std::size_t i = 0; i < chords.size(); ++i) {
      const std::string path = "/chords/" + std::to_string(i);
      const detail::Cursor c(chords[i], path);
      c.allow_only({"degree", "accidental", "quality", "borrowed_mode", "onset_beats",
                    "duration_beats", "inversion", "applied", "suspensions"});
      if (c.has("inversion") && c.integer("inversion") != 0) {
        throw ParseError(path + "/inversion", "unsupported token 'inversion=" +
                                                  std::to_string(c.integer("inversion")) + "'");
      }
      if (c.has("applied") && c.integer("applied") != 0) {
        throw ParseError(path + "/applied", "unsupported token 'applied=" +
                                                std::to_string(c.integer("applied")) + "'");
      }
      if (c.has("suspensions") && !c.array("suspensions").empty()) {
        throw ParseError(path + "/suspensions",
                         "unsupported token '" + c.at("suspensions").dump() + "'");
      }
      FunctionalChord fc;
      fc.degree = checked_int(c, "degree", 1, 7);
      fc.accidental = checked_int(c, "accidental", -2, 2);
      const std::string q = c.string("quality");
      if (q == "triad") {
        fc.marker = ChordMarker::kTriad;
      } else if (q == "seventh") {
        fc.marker = ChordMarker::kSeventh;
      } else {
        throw ParseError(path + "/quality", "unsupported token '" + q + "'");
      }
      if (c.has("borrowed_mode")) fc.borrowed_mode = detail::parse_mode(c, "borrowed_mode");
      fc.onset_beats = detail::parse_fraction(c, "onset_beats", false);
      fc.duration_beats = detail::parse_fraction(c, "duration_beats", true);
      const TimedChord tc{fc.onset_beats.ticks(), fc.duration_beats.ticks(), roman_to_chord(seg.key, fc)};
      if (!seg.chords.empty()) {
        const auto& prev = seg.chords.back();
        if (prev.onset_ticks + prev.duration_ticks > tc.onset_ticks) {
          throw ParseError(path, "chord overlaps the previous chord");
        }
      }
      seg.chords.push_back(tc);
    }
  }
  return out;
}

inline Segment parse_segment(std::string_view bytes) { return parse_segment_verbose(bytes).segment; }

/// Artist name from a functional annotation, when present.
inline std::optional<std::string> functional_artist(std::string_view bytes) {
  const auto doc = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (doc.is_object() && doc.contains("artist") && doc["artist"].is_string()) {
    return doc["artist"].get<std::string>();
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Absolute format.

inline nlohmann::json to_absolute_json(const Segment& seg) {
  using nlohmann::json;
  json j;
  j["id"] = seg.id;
  j["audio_ref"] = seg.audio_ref;
  j["split"] = seg.split ? json(std::string(to_string(*seg.split))) : json(nullptr);
  j["user_start_s"] = seg.user_start_s;
  j["user_end_s"] = seg.user_end_s;
  j["meter"] = {{"beats_per_bar", seg.meter.beats_per_bar()}, {"beat_unit", seg.meter.beat_unit()}};
  j["key"] = {{"tonic_pc", seg.key.tonic.value()}, {"mode", std::string(to_string(seg.key.mode))}};
  j["melody"] = json::array();
  for (const auto& n : seg.melody) {
    j["melody"].push_back(
        {{"onset_ticks", n.onset_ticks}, {"duration_ticks", n.duration_ticks}, {"midi", n.pitch.midi()}});
  }
  j["chords"] = json::array();
  for (const auto& c : seg.chords) {
    j["chords"].push_back({{"onset_ticks", c.onset_ticks},
                           {"duration_ticks", c.duration_ticks},
                           {"root_pc", c.chord.root.value()},
                           {"quality", std::string(to_string(c.chord.quality))}});
  }
  return j;
}

inline Segment segment_from_absolute_json(const nlohmann::json& doc) {
  using detail::checked_int;
  const detail::Cursor root(doc, "");
  root.allow_only({"id", "audio_ref", "split", "user_start_s", "user_end_s", "meter", "key",
                   "melody", "chords"});
  Segment seg;
  seg.id = root.string("id");
  seg.audio_ref = root.string("audio_ref");
  if (root.has("split")) {
    const auto s = split_from_string(root.string("split"));
    if (!s) throw ParseError("/split", "unknown split");
    seg.split = s;
  }
  seg.user_start_s = root.number("user_start_s");
  seg.user_end_s = root.number("user_end_s");
  if (!(seg.user_start_s < seg.user_end_s)) {
    throw ParseError("/user_end_s", "user_end_s must exceed user_start_s");
  }
  seg.meter = detail::parse_meter(root.object("meter"));
  const detail::Cursor k = root.object("key");
  k.allow_only({"tonic_pc", "mode"});
  seg.key = KeySignature{PitchClass(checked_int(k, "tonic_pc", 0, 11)), detail::parse_mode(k, "mode")};
  std::vector<ScoreNote> notes;
  const auto& mel = root.array("melody");
  for (std::size_t i = 0; i < mel.size(); ++i) {
    const detail::Cursor n(mel[i], "/melody/" + std::to_string(i));
    n.allow_only({"onset_ticks", "duration_ticks", "midi"});
    notes.push_back({checked_int(n, "onset_ticks", 0, 1 << 24), checked_int(n, "duration_ticks", 1, 1 << 24),
                     Pitch(checked_int(n, "midi", Pitch::kMin, Pitch::kMax))});
  }
  try {
    seg.melody = ScoreMelody(std::move(notes));
  } catch (const Error& e) {
    throw ParseError("/melody", e.what());
  }
  const auto& chords = root.array("chords");
  for (std::size_t i = 0; i < chords.size(); ++i) {
    const std::string path = "/chords/" + std::to_string(i);
    const detail::Cursor c(chords[i], path);
    c.allow_only({"onset_ticks", "duration_ticks", "root_pc", "quality"});
    const auto q = chord_quality_from_string(c.string("quality"));
    if (!q) throw ParseError(path + "/quality", "unknown chord quality");
    seg.chords.push_back({checked_int(c, "onset_ticks", 0, 1 << 24),
                          checked_int(c, "duration_ticks", 1, 1 << 24),
                          {PitchClass(checked_int(c, "root_pc", 0, 11)), *q}});
  }
  return seg;
}

inline Segment parse_absolute_segment(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("", std::string("malformed JSON: ") + e.what());
  }
  return segment_from_absolute_json(doc);
}

// ---------------------------------------------------------------------------
// Splits.

/// Assigns whole artists to train/valid/test so segment counts approach
/// `ratios`. Artists are shuffled with `seed`, ordered largest first, and
/// each goes to the split furthest below its target count (ties: earlier
/// split).
inline std::vector<Segment> stratified_split(std::vector<Segment> segments,
                                             const std::map<std::string, std::string>& artist_of,
                                             std::array<int, 3> ratios = {8, 1, 1},
                                             std::uint64_t seed = 0) {
  std::map<std::string, std::size_t> count;
  for (const auto& s : segments) {
    const auto it = artist_of.find(s.id);
    if (it == artist_of.end()) throw KeyError("no artist for segment '" + s.id + "'");
    ++count[it->second];
  }
  std::vector<std::pair<std::string, std::size_t>> artists(count.begin(), count.end());
  std::mt19937_64 rng(seed);
  std::shuffle(artists.begin(), artists.end(), rng);
  std::stable_sort(artists.begin(), artists.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  const double total = static_cast<double>(segments.size());
  const double ratio_sum = ratios[0] + ratios[1] + ratios[2];
  std::array<double, 3> filled{0, 0, 0};
  std::map<std::string, Split> assignment;
  for (const auto& [artist, n] : artists) {
    std::size_t best = 0;
    double best_deficit = -1e300;
    for (std::size_t s = 0; s < 3; ++s) {
      const double deficit = ratios[s] * total / ratio_sum - filled[s];
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = s;
      }
    }
    filled[best] += static_cast<double>(n);
    assignment[artist] = static_cast<Split>(best);
  }
  for (auto& s : segments) s.split = assignment.at(artist_of.at(s.id));
  return segments;
}

}  // namespace beatscribe
