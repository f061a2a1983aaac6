#pragma once

// Standard MIDI File (format 0) writer for lead sheets, plus a small reader
// that recovers note timings.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "beatscribe/align.hpp"
#include "beatscribe/audio.hpp"
#include "beatscribe/leadsheet.hpp"

namespace beatscribe {

inline constexpr int kMidiDivision = 480;
inline constexpr int kMidiTicksPerTick = kMidiDivision / kTicksPerBeat;

namespace detail {

inline void put_be(std::vector<unsigned char>& out, std::uint32_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

inline void put_vlq(std::vector<unsigned char>& out, std::uint32_t v) {
  unsigned char buf[5];
  int n = 0;
  buf[n++] = static_cast<unsigned char>(v & 0x7F);
  while ((v >>= 7) != 0) buf[n++] = static_cast<unsigned char>(0x80 | (v & 0x7F));
  while (n > 0) out.push_back(buf[--n]);
}

struct TrackEvent {
  std::uint32_t tick;
  int order;  // meta, note-off, note-on
  std::vector<unsigned char> bytes;
};

inline std::uint32_t tempo_us(double seconds_per_quarter) {
  const double us = std::round(seconds_per_quarter * 1e6);
  return static_cast<std::uint32_t>(std::clamp(us, 1.0, 16777215.0));
}

}  // namespace detail

/// Format-0 file at 480 ticks per quarter with one quarter per beat. A
/// tempo event at every beat reproduces the alignment; if beat 0 is after
/// time zero, leading quarters of silence are inserted to cover the gap.
/// Melody on channel 0, block chords (root in octave 3) on channel 1.
inline std::vector<unsigned char> emit_midi(const LeadSheet& sheet, const AlignmentMap& map) {
  using detail::TrackEvent;
  if (map.num_ticks() < sheet.num_ticks) throw InputError("alignment does not cover the sheet");
  const auto& t = map.beat_to_time_s();
  std::vector<TrackEvent> ev;
  auto meta = [&](std::uint32_t tick, unsigned char type, std::vector<unsigned char> data) {
    std::vector<unsigned char> b{0xFF, type};
    detail::put_vlq(b, static_cast<std::uint32_t>(data.size()));
    b.insert(b.end(), data.begin(), data.end());
    ev.push_back({tick, 0, std::move(b)});
  };
  auto tempo = [&](std::uint32_t tick, double spq) {
    std::vector<unsigned char> d;
    detail::put_be(d, detail::tempo_us(spq), 3);
    meta(tick, 0x51, std::move(d));
  };

  const int unit = sheet.meter.beat_unit();
  int log2_unit = 0;
  while ((1 << log2_unit) < unit) ++log2_unit;
  meta(0, 0x58, {static_cast<unsigned char>(sheet.meter.beats_per_bar()), static_cast<unsigned char>(log2_unit), 24, 8});
  meta(0, 0x59, {static_cast<unsigned char>(static_cast<signed char>(detail::key_fifths(sheet.key))),
                 static_cast<unsigned char>(sheet.key.mode == Mode::kMinor ? 1 : 0)});

  std::uint32_t pre = 0;
  if (t[0] > 0.0) {
    const int quarters = static_cast<int>(std::ceil(t[0] / 16.0));
    tempo(0, t[0] / quarters);
    pre = static_cast<std::uint32_t>(quarters * kMidiDivision);
  }
  for (int b = 0; b < map.num_beats(); ++b) {
    tempo(pre + static_cast<std::uint32_t>(b * kMidiDivision), t[static_cast<std::size_t>(b + 1)] - t[static_cast<std::size_t>(b)]);
  }

  auto note = [&](int channel, int key, int velocity, int on, int off) {
    const auto ch = static_cast<unsigned char>(channel);
    ev.push_back({pre + static_cast<std::uint32_t>(on * kMidiTicksPerTick), 2,
                  {static_cast<unsigned char>(0x90 | ch), static_cast<unsigned char>(key), static_cast<unsigned char>(velocity)}});
    ev.push_back({pre + static_cast<std::uint32_t>(off * kMidiTicksPerTick), 1,
                  {static_cast<unsigned char>(0x80 | ch), static_cast<unsigned char>(key), 0}});
  };
  for (const auto& n : sheet.melody) note(0, n.pitch.midi(), 100, n.onset_ticks, n.onset_ticks + n.duration_ticks);
  for (const auto& c : sheet.chords) {
    for (int iv : chord_intervals(c.chord.quality)) {
      note(1, 48 + c.chord.root.value() + iv, 80, c.onset_ticks, c.onset_ticks + c.duration_ticks);
    }
  }
  std::stable_sort(ev.begin(), ev.end(), [](const TrackEvent& a, const TrackEvent& b) {
    return a.tick != b.tick ? a.tick < b.tick : a.order < b.order;
  });

  std::vector<unsigned char> track;
  std::uint32_t last = 0;
  for (const auto& e : ev) {
    detail::put_vlq(track, e.tick - last);
    last = e.tick;
    track.insert(track.end(), e.bytes.begin(), e.bytes.end());
  }
  track.insert(track.end(), {0x00, 0xFF, 0x2F, 0x00});

  std::vector<unsigned char> out{'M', 'T', 'h', 'd'};
  detail::put_be(out, 6, 4);
  detail::put_be(out, 0, 2);
  detail::put_be(out, 1, 2);
  detail::put_be(out, kMidiDivision, 2);
  out.insert(out.end(), {'M', 'T', 'r', 'k'});
  detail::put_be(out, static_cast<std::uint32_t>(track.size()), 4);
  out.insert(out.end(), track.begin(), track.end());
  return out;
}

inline void write_midi(const std::string& path, const LeadSheet& sheet, const AlignmentMap& map) {
  detail::write_file(path, emit_midi(sheet, map));
}

/// A sounding note recovered from a MIDI file.
struct MidiNote {
  int channel;
  int key;
  std::uint32_t on_tick;
  std::uint32_t off_tick;
  double on_s;
  double off_s;
};

/// Notes of a single-track file, timed through its tempo events. Supports
/// what emit_midi writes (plus running status).
inline std::vector<MidiNote> read_midi_notes(std::span<const unsigned char> bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw FormatError("truncated MIDI data");
  };
  auto be = [&](int n) {
    need(static_cast<std::size_t>(n));
    std::uint32_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 8) | bytes[pos++];
    return v;
  };
  auto vlq = [&] {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      need(1);
      const unsigned char c = bytes[pos++];
      v = (v << 7) | (c & 0x7F);
      if ((c & 0x80) == 0) return v;
    }
    throw FormatError("bad variable-length quantity");
  };
  need(14);
  if (std::string(bytes.begin(), bytes.begin() + 4) != "MThd") throw FormatError("bad MIDI header");
  pos = 4;
  if (be(4) != 6) throw FormatError("bad MIDI header length");
  be(2);
  if (be(2) != 1) throw FormatError("expected a single track");
  const std::uint32_t division = be(2);
  if (division == 0 || (division & 0x8000) != 0) throw FormatError("unsupported MIDI division");
  need(8);
  if (std::string(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + 4)) != "MTrk") {
    throw FormatError("bad MIDI track header");
  }
  pos += 4;
  const std::size_t end = pos + be(4);
  if (end > bytes.size()) throw FormatError("truncated MIDI track");

  struct Raw { std::uint32_t tick; int kind; int channel; int key; std::uint32_t tempo; };
  std::vector<Raw> raw;
  std::uint32_t tick = 0;
  unsigned char status = 0;
  while (pos < end) {
    tick += vlq();
    need(1);
    if (bytes[pos] & 0x80) status = bytes[pos++];
    if (status == 0xFF) {
      need(1);
      const unsigned char type = bytes[pos++];
      const std::uint32_t len = vlq();
      need(len);
      if (type == 0x51 && len == 3) {
        const std::uint32_t us = (std::uint32_t{bytes[pos]} << 16) | (std::uint32_t{bytes[pos + 1]} << 8) | bytes[pos + 2];
        raw.push_back({tick, 0, 0, 0, us});
      }
      pos += len;
      if (type == 0x2F) break;
      continue;
    }
    const int hi = status & 0xF0;
    const int ch = status & 0x0F;
    if (hi == 0x80 || hi == 0x90) {
      need(2);
      const int key = bytes[pos];
      const int vel = bytes[pos + 1];
      pos += 2;
      raw.push_back({tick, (hi == 0x90 && vel > 0) ? 2 : 1, ch, key, 0});
    } else if (hi == 0xC0 || hi == 0xD0) {
      pos += 1;
    } else if (hi == 0xA0 || hi == 0xB0 || hi == 0xE0) {
      pos += 2;
    } else {
      throw FormatError("unsupported MIDI event");
    }
  }

  std::vector<MidiNote> notes;
  std::vector<std::size_t> open;
  std::uint32_t tempo_tick = 0;
  double tempo_s = 0.0;
  double spq = 0.5;
  auto seconds = [&](std::uint32_t tk) { return tempo_s + (tk - tempo_tick) * spq / division; };
  for (const auto& r : raw) {
    if (r.kind == 0) {
      tempo_s = seconds(r.tick);
      tempo_tick = r.tick;
      spq = r.tempo / 1e6;
    } else if (r.kind == 2) {
      open.push_back(notes.size());
      notes.push_back({r.channel, r.key, r.tick, r.tick, seconds(r.tick), seconds(r.tick)});
    } else {
      for (auto it = open.begin(); it != open.end(); ++it) {
        MidiNote& n = notes[*it];
        if (n.channel == r.channel && n.key == r.key) {
          n.off_tick = r.tick;
          n.off_s = seconds(r.tick);
          open.erase(it);
          break;
        }
      }
    }
  }
  return notes;
}

}  // namespace beatscribe
