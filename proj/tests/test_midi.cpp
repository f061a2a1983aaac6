#include <gtest/gtest.h>

#include "beatscribe/midi.hpp"

using namespace beatscribe;

namespace {

AlignmentMap grid_map(double bpm, int beats, double start = 0.0) {
  std::vector<double> t;
  for (int b = 0; b <= beats; ++b) t.push_back(start + b * 60.0 / bpm);
  return AlignmentMap(t);
}

LeadSheet sheet(ScoreMelody m, const AlignmentMap& map, std::vector<TimedChord> chords = {}) {
  return assemble(m, std::move(chords), {PitchClass(0), Mode::kMajor}, Meter(4, 4), map);
}

}  // namespace

TEST(Midi, QuarterNoteAtTickZero) {
  const auto map = grid_map(120, 4);
  const auto bytes = emit_midi(sheet(ScoreMelody({{0, 4, Pitch(60)}}), map), map);
  ASSERT_GE(bytes.size(), 22u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "MThd");
  EXPECT_EQ(bytes[12], 480 >> 8);
  EXPECT_EQ(bytes[13], 480 & 0xFF);
  const auto notes = read_midi_notes(bytes);
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_EQ(notes[0].channel, 0);
  EXPECT_EQ(notes[0].key, 60);
  EXPECT_EQ(notes[0].on_tick, 0u);
  EXPECT_EQ(notes[0].off_tick, 480u);
  EXPECT_NEAR(notes[0].on_s, 0.0, 1e-9);
  EXPECT_NEAR(notes[0].off_s, 0.5, 1e-6);
  EXPECT_EQ(std::vector<unsigned char>(bytes.end() - 3, bytes.end()), (std::vector<unsigned char>{0xFF, 0x2F, 0x00}));
}

TEST(Midi, EmptySheetIsValid) {
  const auto map = grid_map(100, 4);
  const auto bytes = emit_midi(sheet(ScoreMelody{}, map), map);
  EXPECT_TRUE(read_midi_notes(bytes).empty());
}

TEST(Midi, ByteIdenticalAcrossRuns) {
  const auto map = grid_map(97, 8, 0.3);
  const auto s = sheet(ScoreMelody({{0, 3, Pitch(64)}, {5, 9, Pitch(67)}}), map,
                       {{0, 16, {PitchClass(0), ChordQuality::kMaj}}});
  EXPECT_EQ(emit_midi(s, map), emit_midi(s, map));
}

TEST(Midi, TimingFollowsAlignment) {
  std::vector<double> t{0.0};
  for (int b = 0; b < 8; ++b) t.push_back(t.back() + 0.4 + 0.03 * b);
  const AlignmentMap map(t);
  const ScoreMelody m({{0, 3, Pitch(60)}, {3, 6, Pitch(62)}, {13, 11, Pitch(65)}, {30, 2, Pitch(67)}});
  const auto notes = read_midi_notes(emit_midi(sheet(m, map), map));
  ASSERT_EQ(notes.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_NEAR(notes[i].on_s, tick_time(map, m[i].onset_ticks), 1e-5);
    EXPECT_NEAR(notes[i].off_s, tick_time(map, m[i].onset_ticks + m[i].duration_ticks), 1e-5);
  }
}

TEST(Midi, PreRollCoversLateFirstBeat) {
  const auto map = grid_map(120, 4, 2.5);
  const auto notes = read_midi_notes(emit_midi(sheet(ScoreMelody({{4, 4, Pitch(72)}}), map), map));
  ASSERT_EQ(notes.size(), 1u);
  EXPECT_EQ(notes[0].on_tick, 480u + 480u);
  EXPECT_NEAR(notes[0].on_s, 3.0, 1e-6);
}

TEST(Midi, ChordsOnSecondChannel) {
  const auto map = grid_map(120, 4);
  const auto notes = read_midi_notes(
      emit_midi(sheet(ScoreMelody{}, map, {{0, 8, {PitchClass(2), ChordQuality::kMin7}}}), map));
  ASSERT_EQ(notes.size(), 4u);
  std::vector<int> keys;
  for (const auto& n : notes) {
    EXPECT_EQ(n.channel, 1);
    EXPECT_EQ(n.off_tick, 960u);
    keys.push_back(n.key);
  }
  std::sort(keys.begin(), keys.end());
  EXPECT_EQ(keys, (std::vector<int>{50, 53, 57, 60}));
}

TEST(Midi, ReaderRejectsGarbage) {
  const std::vector<unsigned char> junk{'R', 'I', 'F', 'F', 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  EXPECT_THROW(read_midi_notes(junk), FormatError);
}
