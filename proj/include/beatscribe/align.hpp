#pragma once

// Beat grids from an external tracker, and the beat -> seconds alignment.

#include <cmath>
#include <cstddef>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "beatscribe/core.hpp"

namespace beatscribe {

class BeatGrid {
 public:
  BeatGrid(std::vector<double> beat_times_s, std::vector<bool> downbeat_flags)
      : beats_(std::move(beat_times_s)), downbeats_(std::move(downbeat_flags)) {
    if (beats_.size() != downbeats_.size()) throw InputError("beat and downbeat lists differ in length");
    bool any = false;
    for (std::size_t i = 0; i < beats_.size(); ++i) {
      if (!(beats_[i] >= 0.0) || (i > 0 && !(beats_[i - 1] < beats_[i]))) {
        throw OrderingError("beat times must be non-negative and strictly increasing");
      }
      any = any || downbeats_[i];
    }
    if (!any) throw InputError("beat grid has no downbeat");
  }

  const std::vector<double>& beat_times_s() const noexcept { return beats_; }
  const std::vector<bool>& downbeat_flags() const noexcept { return downbeats_; }
  std::size_t size() const noexcept { return beats_.size(); }

 private:
  std::vector<double> beats_;
  std::vector<bool> downbeats_;
};

/// Time of every beat 0..B, the last entry extrapolated.
class AlignmentMap {
 public:
  explicit AlignmentMap(std::vector<double> beat_to_time_s) : times_(std::move(beat_to_time_s)) {
    if (times_.size() < 2) throw InputError("alignment needs at least two entries");
    for (std::size_t i = 1; i < times_.size(); ++i) {
      if (!(times_[i - 1] < times_[i])) throw OrderingError("alignment times must strictly increase");
    }
  }

  const std::vector<double>& beat_to_time_s() const noexcept { return times_; }
  int num_beats() const noexcept { return static_cast<int>(times_.size()) - 1; }
  int num_ticks() const noexcept { return num_beats() * kTicksPerBeat; }

  friend bool operator==(const AlignmentMap&, const AlignmentMap&) = default;

 private:
  std::vector<double> times_;
};

/// Maps segment beats onto the grid: beat 0 goes to the downbeat nearest
/// `user_start_s` (ties: earlier), beats 1..B-1 to the following grid beats.
inline AlignmentMap refine_alignment(const BeatGrid& grid, double user_start_s, int num_beats) {
  if (num_beats < 1) throw InputError("num_beats must be >= 1");
  const auto& t = grid.beat_times_s();
  std::size_t first = grid.size();
  double best = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!grid.downbeat_flags()[i]) continue;
    const double d = std::abs(t[i] - user_start_s);
    if (first == grid.size() || d < best) {
      first = i;
      best = d;
    }
  }
  const auto need = static_cast<std::size_t>(num_beats - 1);
  const std::size_t available = grid.size() - first - 1;
  if (available < need) throw InsufficientBeatsError(need, available);

  std::vector<double> out(t.begin() + static_cast<std::ptrdiff_t>(first),
                          t.begin() + static_cast<std::ptrdiff_t>(first + need + 1));
  double interval;
  if (out.size() >= 2) {
    interval = out[out.size() - 1] - out[out.size() - 2];
  } else if (first + 1 < grid.size()) {
    interval = t[first + 1] - t[first];
  } else if (first > 0) {
    interval = t[first] - t[first - 1];
  } else {
    throw InsufficientBeatsError(1, 0);
  }
  out.push_back(out.back() + interval);
  return AlignmentMap(std::move(out));
}

/// Seconds at a fractional beat position, linear between beats.
inline double align(const AlignmentMap& map, double beat_position) {
  const auto& t = map.beat_to_time_s();
  const double b_max = map.num_beats();
  if (!(beat_position >= 0.0 && beat_position <= b_max)) {
    throw RangeError("beat position " + std::to_string(beat_position) + " outside [0, " +
                     std::to_string(map.num_beats()) + "]");
  }
  auto b = static_cast<std::size_t>(std::floor(beat_position));
  if (b >= t.size() - 1) b = t.size() - 2;
  const double frac = beat_position - static_cast<double>(b);
  return t[b] + frac * (t[b + 1] - t[b]);
}

/// Time of sixteenth-note tick `tick` (0..4B).
inline double tick_time(const AlignmentMap& map, int tick) {
  return align(map, static_cast<double>(tick) / kTicksPerBeat);
}

/// Evenly spaced beats with a downbeat every `beats_per_bar`.
inline BeatGrid constant_tempo_grid(double bpm, double first_downbeat_s, int count, int beats_per_bar) {
  if (!(bpm > 0.0)) throw InputError("bpm must be positive");
  if (count < 1) throw InputError("count must be >= 1");
  if (beats_per_bar < 1) throw InputError("beats_per_bar must be >= 1");
  const double period = 60.0 / bpm;
  std::vector<double> beats(static_cast<std::size_t>(count));
  std::vector<bool> down(beats.size());
  for (int i = 0; i < count; ++i) {
    beats[static_cast<std::size_t>(i)] = first_downbeat_s + i * period;
    down[static_cast<std::size_t>(i)] = i % beats_per_bar == 0;
  }
  return BeatGrid(std::move(beats), std::move(down));
}

/// Reads the `{"beats_s": [...], "downbeats": [indices]}` sidecar.
inline BeatGrid beat_grid_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("beats_s") || !j.contains("downbeats") ||
      !j["beats_s"].is_array() || !j["downbeats"].is_array()) {
    throw FormatError("beat grid needs 'beats_s' and 'downbeats' arrays");
  }
  std::vector<double> beats;
  for (const auto& v : j["beats_s"]) {
    if (!v.is_number()) throw FormatError("beats_s entries must be numbers");
    beats.push_back(v.get<double>());
  }
  std::vector<bool> down(beats.size(), false);
  for (const auto& v : j["downbeats"]) {
    if (!v.is_number_integer()) throw FormatError("downbeats entries must be integers");
    const auto i = v.get<std::int64_t>();
    if (i < 0 || static_cast<std::size_t>(i) >= beats.size()) {
      throw FormatError("downbeat index " + std::to_string(i) + " out of range");
    }
    down[static_cast<std::size_t>(i)] = true;
  }
  return BeatGrid(std::move(beats), std::move(down));
}

inline nlohmann::json to_json(const BeatGrid& grid) {
  nlohmann::json j;
  j["beats_s"] = grid.beat_times_s();
  j["downbeats"] = nlohmann::json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.downbeat_flags()[i]) j["downbeats"].push_back(i);
  }
  return j;
}

inline nlohmann::json to_json(const AlignmentMap& map) {
  return {{"beat_to_time_s", map.beat_to_time_s()}};
}

inline AlignmentMap alignment_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("beat_to_time_s") || !j["beat_to_time_s"].is_array()) {
    throw FormatError("alignment needs a 'beat_to_time_s' array");
  }
  std::vector<double> t;
  for (const auto& v : j["beat_to_time_s"]) {
    if (!v.is_number()) throw FormatError("beat_to_time_s entries must be numbers");
    t.push_back(v.get<double>());
  }
  return AlignmentMap(std::move(t));
}

}  // namespace beatscribe
