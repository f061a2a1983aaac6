#include <gtest/gtest.h>

#include <map>

#include "beatscribe/htparse.hpp"

using namespace beatscribe;
using nlohmann::json;

namespace {

const KeySignature kCMajor{PitchClass(0), Mode::kMajor};
const KeySignature kAMinor{PitchClass(9), Mode::kMinor};
const KeySignature kGMajor{PitchClass(7), Mode::kMajor};

FunctionalNote note(int degree, int acc = 0, int oct = 0) {
  FunctionalNote n;
  n.scale_degree = degree;
  n.accidental = acc;
  n.rel_octave = oct;
  return n;
}

FunctionalChord chord(int degree, ChordMarker m, std::optional<Mode> borrowed = std::nullopt) {
  FunctionalChord c;
  c.degree = degree;
  c.marker = m;
  c.borrowed_mode = borrowed;
  return c;
}

json base_doc() {
  return json{{"id", "seg-1"},
              {"audio_ref", "yt:abc"},
              {"user_start_s", 1.5},
              {"user_end_s", 9.0},
              {"meter", {{"beats_per_bar", 4}, {"beat_unit", 4}}},
              {"key", {{"tonic_pc", 0}, {"mode", "major"}}},
              {"notes", json::array()},
              {"chords", json::array()}};
}

json fnote(int degree, int onset_num, int onset_den, int dur_num, int dur_den, int acc = 0, int oct = 0) {
  return {{"scale_degree", degree},
          {"accidental", acc},
          {"rel_octave", oct},
          {"onset_beats", {{"num", onset_num}, {"den", onset_den}}},
          {"duration_beats", {{"num", dur_num}, {"den", dur_den}}}};
}

std::string parse_error_path(const std::string& text) {
  try {
    parse_segment(text);
  } catch (const ParseError& e) {
    return e.path();
  }
  return "<no error>";
}

}  // namespace

TEST(DegreeToPitch, MajorScale) {
  EXPECT_EQ(degree_to_pitch(kCMajor, note(1)).midi(), 60);
  EXPECT_EQ(degree_to_pitch(kCMajor, note(3)).midi(), 64);
  EXPECT_EQ(degree_to_pitch(kCMajor, note(7, -1)).midi(), 70);
  EXPECT_EQ(degree_to_pitch(kCMajor, note(5, 0, -1)).midi(), 55);
}

TEST(DegreeToPitch, MinorThirdLandsOnMiddleCAfterCentering) {
  EXPECT_EQ(degree_to_midi_raw(kAMinor, note(3)), 72);
  auto doc = base_doc();
  doc["key"] = {{"tonic_pc", 9}, {"mode", "minor"}};
  doc["notes"].push_back(fnote(3, 0, 1, 1, 1));
  const Segment s = parse_segment(doc.dump());
  ASSERT_EQ(s.melody.size(), 1u);
  EXPECT_EQ(s.melody[0].pitch.midi(), 60);
}

TEST(DegreeToPitch, OutOfRange) {
  EXPECT_THROW(degree_to_pitch(kCMajor, note(1, 0, 5)), RangeError);
  EXPECT_THROW(degree_to_midi_raw(kCMajor, note(8)), RangeError);
}

TEST(RomanToChord, DiatonicTables) {
  EXPECT_EQ(roman_to_chord(kCMajor, chord(5, ChordMarker::kTriad)), (ChordSymbol{PitchClass(7), ChordQuality::kMaj}));
  EXPECT_EQ(roman_to_chord(kCMajor, chord(5, ChordMarker::kSeventh)), (ChordSymbol{PitchClass(7), ChordQuality::kDom7}));
  EXPECT_EQ(roman_to_chord(kAMinor, chord(2, ChordMarker::kTriad)), (ChordSymbol{PitchClass(11), ChordQuality::kDim}));
  EXPECT_EQ(roman_to_chord(kGMajor, chord(4, ChordMarker::kTriad)), (ChordSymbol{PitchClass(0), ChordQuality::kMaj}));
  EXPECT_EQ(roman_to_chord(kCMajor, chord(7, ChordMarker::kSeventh)), (ChordSymbol{PitchClass(11), ChordQuality::kHdim7}));
}

TEST(RomanToChord, BorrowedMode) {
  // bVI borrowed from C minor
  EXPECT_EQ(roman_to_chord(kCMajor, chord(6, ChordMarker::kTriad, Mode::kMinor)),
            (ChordSymbol{PitchClass(8), ChordQuality::kMaj}));
  // V7 in A minor uses the natural-minor table
  EXPECT_EQ(roman_to_chord(kAMinor, chord(5, ChordMarker::kSeventh)), (ChordSymbol{PitchClass(4), ChordQuality::kMin7}));
}

TEST(ParseSegment, SingleNote) {
  auto doc = base_doc();
  doc["notes"].push_back(fnote(1, 0, 1, 1, 1));
  const Segment s = parse_segment(doc.dump());
  ASSERT_EQ(s.melody.size(), 1u);
  EXPECT_EQ(s.melody[0].pitch.midi(), 60);
  EXPECT_EQ(s.melody[0].onset_ticks, 0);
  EXPECT_EQ(s.melody[0].duration_ticks, 4);
  EXPECT_EQ(s.id, "seg-1");
  EXPECT_DOUBLE_EQ(s.user_start_s, 1.5);
  EXPECT_FALSE(s.split.has_value());
}

TEST(ParseSegment, ChordIVInGMajor) {
  auto doc = base_doc();
  doc["key"] = {{"tonic_pc", 7}, {"mode", "major"}};
  doc["chords"].push_back({{"degree", 4},
                           {"accidental", 0},
                           {"quality", "triad"},
                           {"onset_beats", {{"num", 0}, {"den", 1}}},
                           {"duration_beats", {{"num", 4}, {"den", 1}}}});
  const Segment s = parse_segment(doc.dump());
  ASSERT_EQ(s.chords.size(), 1u);
  EXPECT_EQ(s.chords[0], (TimedChord{0, 16, {PitchClass(0), ChordQuality::kMaj}}));
}

TEST(ParseSegment, FractionalBeats) {
  auto doc = base_doc();
  doc["notes"].push_back(fnote(1, 1, 2, 1, 4));
  doc["notes"].push_back(fnote(2, 3, 4, 5, 4));
  const Segment s = parse_segment(doc.dump());
  EXPECT_EQ(s.melody[0].onset_ticks, 2);
  EXPECT_EQ(s.melody[0].duration_ticks, 1);
  EXPECT_EQ(s.melody[1].onset_ticks, 3);
  EXPECT_EQ(s.melody[1].duration_ticks, 5);
}

TEST(ParseSegment, MelodyCenteredByWholeOctaves) {
  auto doc = base_doc();
  doc["notes"].push_back(fnote(1, 0, 1, 1, 1, 0, 2));
  doc["notes"].push_back(fnote(5, 1, 1, 1, 1, 0, 2));
  const Segment s = parse_segment(doc.dump());
  EXPECT_EQ(s.melody[0].pitch.midi(), 60);
  EXPECT_EQ(s.melody[1].pitch.midi(), 67);
}

TEST(ParseSegment, MalformedJson) {
  EXPECT_THROW(parse_segment("{\"id\": \"x\", "), ParseError);
}

TEST(ParseSegment, ErrorsCarryPaths) {
  auto doc = base_doc();
  doc["notes"].push_back(fnote(9, 0, 1, 1, 1));
  EXPECT_EQ(parse_error_path(doc.dump()), "/notes/0/scale_degree");

  doc = base_doc();
  doc["notes"].push_back(fnote(1, 0, 3, 1, 1));
  EXPECT_EQ(parse_error_path(doc.dump()), "/notes/0/onset_beats/den");

  doc = base_doc();
  doc["surprise"] = 1;
  EXPECT_EQ(parse_error_path(doc.dump()), "/surprise");

  doc = base_doc();
  doc.erase("key");
  EXPECT_EQ(parse_error_path(doc.dump()), "/key");
}

TEST(ParseSegment, UnsupportedChordTokensRejected) {
  auto doc = base_doc();
  doc["chords"].push_back({{"degree", 5},
                           {"accidental", 0},
                           {"quality", "seventh"},
                           {"inversion", 1},
                           {"onset_beats", {{"num", 0}, {"den", 1}}},
                           {"duration_beats", {{"num", 4}, {"den", 1}}}});
  try {
    parse_segment(doc.dump());
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.path(), "/chords/0/inversion");
    EXPECT_NE(std::string(e.what()).find("inversion=1"), std::string::npos);
  }

  doc["chords"][0].erase("inversion");
  doc["chords"][0]["suspensions"] = json::array({4});
  EXPECT_EQ(parse_error_path(doc.dump()), "/chords/0/suspensions");

  doc["chords"][0].erase("suspensions");
  doc["chords"][0]["quality"] = "ninth";
  EXPECT_EQ(parse_error_path(doc.dump()), "/chords/0/quality");
}

TEST(ParseSegment, MidSegmentChangesRejected) {
  auto doc = base_doc();
  doc["key_changes"] = json::array({json{{"beat", 4}}});
  EXPECT_EQ(parse_error_path(doc.dump()), "/key_changes");
  doc = base_doc();
  doc["key_changes"] = json::array();
  EXPECT_NO_THROW(parse_segment(doc.dump()));
}

TEST(ParseSegment, CompoundMeterWarns) {
  auto doc = base_doc();
  doc["meter"] = {{"beats_per_bar", 6}, {"beat_unit", 8}};
  const auto parsed = parse_segment_verbose(doc.dump());
  EXPECT_EQ(parsed.warnings.size(), 1u);
  EXPECT_EQ(parsed.segment.meter, Meter(6, 8));
}

TEST(ParseSegment, OverlappingNotesRejected) {
  auto doc = base_doc();
  doc["notes"].push_back(fnote(1, 0, 1, 2, 1));
  doc["notes"].push_back(fnote(2, 1, 1, 1, 1));
  EXPECT_EQ(parse_error_path(doc.dump()), "/notes");
}

TEST(FunctionalArtist, Optional) {
  auto doc = base_doc();
  EXPECT_FALSE(functional_artist(doc.dump()).has_value());
  doc["artist"] = "Someone";
  EXPECT_EQ(functional_artist(doc.dump()), "Someone");
  EXPECT_NO_THROW(parse_segment(doc.dump()));
}

TEST(AbsoluteFormat, RoundTrip) {
  auto doc = base_doc();
  doc["notes"].push_back(fnote(1, 0, 1, 1, 1));
  doc["notes"].push_back(fnote(3, 1, 1, 1, 2));
  doc["chords"].push_back({{"degree", 1},
                           {"accidental", 0},
                           {"quality", "seventh"},
                           {"onset_beats", {{"num", 0}, {"den", 1}}},
                           {"duration_beats", {{"num", 2}, {"den", 1}}}});
  Segment s = parse_segment(doc.dump());
  s.split = Split::kValid;
  const json abs = to_absolute_json(s);
  EXPECT_EQ(segment_from_absolute_json(abs), s);
  EXPECT_EQ(parse_absolute_segment(abs.dump()), s);
  EXPECT_EQ(abs["chords"][0]["quality"], "maj7");
}

TEST(AbsoluteFormat, NullSplit) {
  Segment s;
  s.id = "a";
  s.user_end_s = 1.0;
  const auto back = segment_from_absolute_json(to_absolute_json(s));
  EXPECT_FALSE(back.split.has_value());
}

namespace {

std::vector<Segment> segments_for(const std::vector<std::pair<std::string, int>>& artists,
                                  std::map<std::string, std::string>& artist_of) {
  std::vector<Segment> out;
  for (const auto& [name, n] : artists) {
    for (int i = 0; i < n; ++i) {
      Segment s;
      s.id = name + "-" + std::to_string(i);
      s.user_end_s = 1.0;
      artist_of[s.id] = name;
      out.push_back(s);
    }
  }
  return out;
}

std::array<int, 3> split_counts(const std::vector<Segment>& segs) {
  std::array<int, 3> c{0, 0, 0};
  for (const auto& s : segs) ++c[static_cast<std::size_t>(*s.split)];
  return c;
}

}  // namespace

TEST(StratifiedSplit, TenArtistsEightOneOne) {
  std::map<std::string, std::string> artist_of;
  std::vector<std::pair<std::string, int>> artists;
  for (int i = 0; i < 10; ++i) artists.push_back({"artist" + std::to_string(i), 1});
  const auto segs = segments_for(artists, artist_of);
  EXPECT_EQ(split_counts(stratified_split(segs, artist_of, {8, 1, 1}, 0)), (std::array<int, 3>{8, 1, 1}));
}

TEST(StratifiedSplit, ArtistsNeverStraddleSplits) {
  std::map<std::string, std::string> artist_of;
  const auto segs = segments_for({{"a", 5}, {"b", 3}, {"c", 2}, {"d", 2}, {"e", 1}, {"f", 1}}, artist_of);
  const auto out = stratified_split(segs, artist_of, {8, 1, 1}, 3);
  std::map<std::string, Split> seen;
  for (const auto& s : out) {
    const auto& a = artist_of.at(s.id);
    if (seen.count(a)) {
      EXPECT_EQ(seen[a], *s.split);
    }
    seen[a] = *s.split;
  }
  EXPECT_EQ(seen["a"], Split::kTrain);
  const auto c = split_counts(out);
  EXPECT_GT(c[1], 0);
  EXPECT_GT(c[2], 0);
}

TEST(StratifiedSplit, DeterministicPerSeed) {
  std::map<std::string, std::string> artist_of;
  std::vector<std::pair<std::string, int>> artists;
  for (int i = 0; i < 30; ++i) artists.push_back({"artist" + std::to_string(i), 1 + i % 4});
  const auto segs = segments_for(artists, artist_of);
  const auto a = stratified_split(segs, artist_of, {8, 1, 1}, 42);
  const auto b = stratified_split(segs, artist_of, {8, 1, 1}, 42);
  EXPECT_EQ(a, b);
}

TEST(StratifiedSplit, MissingArtist) {
  std::map<std::string, std::string> artist_of;
  auto segs = segments_for({{"a", 2}}, artist_of);
  artist_of.erase("a-1");
  EXPECT_THROW(stratified_split(segs, artist_of), KeyError);
}
