#include <gtest/gtest.h>

#include "beatscribe/leadsheet.hpp"

using namespace beatscribe;

namespace {

ScoreMelody scale(int tonic_midi, Mode mode) {
  std::vector<ScoreNote> notes;
  const auto& off = scale_offsets(mode);
  for (int i = 0; i < 7; ++i) notes.push_back({4 * i, 4, Pitch(tonic_midi + off[static_cast<std::size_t>(i)])});
  notes.push_back({28, 4, Pitch(tonic_midi + 12)});
  return ScoreMelody(notes);
}

AlignmentMap grid_map(double bpm, int beats, double start = 0.0) {
  std::vector<double> t;
  for (int b = 0; b <= beats; ++b) t.push_back(start + b * 60.0 / bpm);
  return AlignmentMap(t);
}

LeadSheet c_major_sheet(ScoreMelody m, std::vector<TimedChord> chords = {}, int beats = 4) {
  return assemble(m, std::move(chords), {PitchClass(0), Mode::kMajor}, Meter(4, 4), grid_map(120, beats));
}

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

}  // namespace

TEST(KsKey, ScalesFindTheirKeys) {
  EXPECT_EQ(ks_key(scale(60, Mode::kMajor), {}), (KeySignature{PitchClass(0), Mode::kMajor}));
  EXPECT_EQ(ks_key(scale(62, Mode::kMajor), {}), (KeySignature{PitchClass(2), Mode::kMajor}));
  EXPECT_EQ(ks_key(scale(57, Mode::kMinor), {}), (KeySignature{PitchClass(9), Mode::kMinor}));
}

TEST(KsKey, EmptyInput) {
  EXPECT_THROW(ks_key(ScoreMelody{}, {}), InputError);
}

TEST(KsKey, ChordsContribute) {
  const std::vector<TimedChord> chords{{0, 16, {PitchClass(7), ChordQuality::kMaj}},
                                       {16, 16, {PitchClass(0), ChordQuality::kMaj}},
                                       {32, 16, {PitchClass(2), ChordQuality::kDom7}}};
  EXPECT_EQ(ks_key(ScoreMelody{}, chords), (KeySignature{PitchClass(7), Mode::kMajor}));
}

TEST(KsKey, TranspositionEquivariant) {
  const ScoreMelody m({{0, 3, Pitch(64)}, {3, 1, Pitch(66)}, {4, 8, Pitch(69)}, {12, 2, Pitch(61)}});
  const KeySignature base = ks_key(m, {});
  for (int k = 1; k < 12; ++k) {
    const KeySignature t = ks_key(ScoreMelody([&] {
                                    std::vector<ScoreNote> v(m.begin(), m.end());
                                    for (auto& n : v) n.pitch = Pitch(n.pitch.midi() + k);
                                    return v;
                                  }()),
                                  {});
    EXPECT_EQ(t.tonic.value(), (base.tonic.value() + k) % 12);
    EXPECT_EQ(t.mode, base.mode);
  }
}

TEST(Assemble, TempoAndRanges) {
  const auto s = assemble(ScoreMelody({{0, 4, Pitch(60)}}), {}, {PitchClass(0), Mode::kMajor}, Meter(4, 4),
                          grid_map(120, 8, 1.0));
  EXPECT_DOUBLE_EQ(s.tempo_bpm, 120.0);
  EXPECT_EQ(s.pickup_ticks, 0);
  EXPECT_EQ(s.num_ticks, 32);
  EXPECT_THROW(c_major_sheet(ScoreMelody({{14, 4, Pitch(60)}})), InputError);
  const std::vector<TimedChord> bad{{4, 4, {PitchClass(0), ChordQuality::kMaj}}, {4, 4, {PitchClass(0), ChordQuality::kMin}}};
  EXPECT_THROW(c_major_sheet(ScoreMelody{}, bad), InputError);
}

TEST(Lilypond, QuarterNoteMiddleC) {
  const auto ly = emit_lilypond(c_major_sheet(ScoreMelody({{0, 4, Pitch(60)}})));
  EXPECT_TRUE(contains(ly, "c'4 r2.")) << ly;
  EXPECT_TRUE(contains(ly, "\\key c \\major"));
  EXPECT_TRUE(contains(ly, "\\time 4/4"));
  EXPECT_TRUE(contains(ly, "\\tempo 4 = 120"));
}

TEST(Lilypond, TiesAcrossBarline) {
  const auto ly = emit_lilypond(c_major_sheet(ScoreMelody({{12, 8, Pitch(60)}}), {}, 8));
  EXPECT_TRUE(contains(ly, "r2. c'4~ c'4 r2.")) << ly;
}

TEST(Lilypond, OctavesAndSpelling) {
  const auto s = assemble(ScoreMelody({{0, 4, Pitch(66)}, {4, 4, Pitch(70)}, {8, 4, Pitch(47)}, {12, 4, Pitch(84)}}), {},
                          {PitchClass(7), Mode::kMajor}, Meter(4, 4), grid_map(120, 4));
  const auto ly = emit_lilypond(s);
  EXPECT_TRUE(contains(ly, "fis'4 ais'4 b,4 c'''4")) << ly;
  const auto f = assemble(ScoreMelody({{0, 4, Pitch(70)}, {4, 4, Pitch(63)}}), {}, {PitchClass(5), Mode::kMajor},
                          Meter(4, 4), grid_map(120, 2));
  EXPECT_TRUE(contains(emit_lilypond(f), "bes'4 es'4")) << emit_lilypond(f);
  EXPECT_TRUE(contains(emit_lilypond(f), "\\key f \\major"));
}

TEST(Lilypond, SharpKeysSpellTheirScale) {
  const auto s = assemble(ScoreMelody({{0, 4, Pitch(65)}}), {}, {PitchClass(6), Mode::kMajor}, Meter(4, 4),
                          grid_map(120, 1));
  const auto ly = emit_lilypond(s);
  EXPECT_TRUE(contains(ly, "eis'4")) << ly;
  EXPECT_TRUE(contains(ly, "\\key fis \\major"));
  const auto m = assemble(ScoreMelody({{0, 4, Pitch(63)}}), {}, {PitchClass(3), Mode::kMinor}, Meter(4, 4),
                          grid_map(120, 1));
  EXPECT_TRUE(contains(emit_lilypond(m), "\\key dis \\minor")) << emit_lilypond(m);
}

TEST(Lilypond, ChordNames) {
  const std::vector<TimedChord> chords{{4, 4, {PitchClass(7), ChordQuality::kDom7}},
                                       {8, 8, {PitchClass(11), ChordQuality::kHdim7}}};
  const auto ly = emit_lilypond(c_major_sheet(ScoreMelody({{0, 16, Pitch(60)}}), chords));
  EXPECT_TRUE(contains(ly, "\\chordmode")) << ly;
  EXPECT_TRUE(contains(ly, "s4 g4:7 b2:m7.5-")) << ly;
  EXPECT_TRUE(contains(ly, "\\new ChordNames"));
  EXPECT_TRUE(contains(ly, "c'1")) << ly;
}

TEST(Lilypond, OtherMeters) {
  const auto s = assemble(ScoreMelody({{0, 12, Pitch(60)}}), {}, {PitchClass(0), Mode::kMajor}, Meter(6, 8),
                          grid_map(120, 6));
  const auto ly = emit_lilypond(s);
  EXPECT_TRUE(contains(ly, "\\time 6/8"));
  EXPECT_TRUE(contains(ly, "c'4. r4.")) << ly;
}

TEST(Lilypond, Deterministic) {
  const auto s = c_major_sheet(ScoreMelody({{1, 3, Pitch(60)}, {5, 7, Pitch(62)}}));
  EXPECT_EQ(emit_lilypond(s), emit_lilypond(s));
  EXPECT_TRUE(contains(emit_lilypond(s), "r16 c'8. r16 d'4.~ d'16 r4")) << emit_lilypond(s);
}
