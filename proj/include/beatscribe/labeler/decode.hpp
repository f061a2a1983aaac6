#pragma once

// Running the labeler over whole segments and turning per-tick
// probabilities back into notes and chords.

#include <algorithm>
#include <vector>

#include "beatscribe/align.hpp"
#include "beatscribe/features.hpp"
#include "beatscribe/labeler/model.hpp"

namespace beatscribe {

/// Logits for a whole segment. Sequences longer than `max_ticks` are run in
/// consecutive windows of `max_ticks`.
template <class T>
Matrix<double> predict_logits(const LabelerParams<T>& params, const ResampledFeatures& x) {
  const auto window = static_cast<std::size_t>(params.config.max_ticks);
  if (x.dim() != static_cast<std::size_t>(params.config.input_dim)) {
    throw ShapeError("features have dim " + std::to_string(x.dim()) + ", labeler expects " +
                     std::to_string(params.config.input_dim));
  }
  Matrix<double> out(x.ticks(), static_cast<std::size_t>(params.config.num_classes()));
  for (std::size_t start = 0; start < x.ticks(); start += window) {
    const std::size_t len = std::min(window, x.ticks() - start);
    Matrix<T> chunk(len, x.dim());
    for (std::size_t i = 0; i < len * x.dim(); ++i) chunk.data[i] = static_cast<T>(x.frames.data[start * x.dim() + i]);
    const Matrix<T> logits = forward(params, chunk);
    std::copy(logits.data.begin(), logits.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(start * out.cols));
  }
  return out;
}

/// Ticks whose no-onset probability is below `tau`, ascending.
inline std::vector<int> onset_ticks(const Matrix<double>& probs, double tau) {
  std::vector<int> out;
  for (std::size_t i = 0; i < probs.rows; ++i) {
    if (probs(i, kNoOnset) < tau) out.push_back(static_cast<int>(i));
  }
  return out;
}

/// Most probable non-empty class at a tick (ties: lowest class).
inline int best_class(const Matrix<double>& probs, std::size_t tick) {
  const auto row = probs.row(tick);
  return static_cast<int>(std::max_element(row.begin() + 1, row.end()) - row.begin());
}

/// Melody in ticks; each note lasts until the next onset or the end of the
/// segment.
inline ScoreMelody decode_ticks(const Matrix<double>& logits, double tau) {
  if (logits.cols != static_cast<std::size_t>(kMelodyClasses)) throw ShapeError("expected melody logits");
  const Matrix<double> probs = softmax_rows(logits);
  const auto ticks = onset_ticks(probs, tau);
  std::vector<ScoreNote> notes;
  for (std::size_t j = 0; j < ticks.size(); ++j) {
    const int end = j + 1 < ticks.size() ? ticks[j + 1] : static_cast<int>(logits.rows);
    notes.push_back({ticks[j], end - ticks[j], pitch_from_class_id(best_class(probs, static_cast<std::size_t>(ticks[j])))});
  }
  return ScoreMelody(std::move(notes));
}

/// Score-form melody mapped to seconds with legato offsets.
inline PerfMelody to_performance(const ScoreMelody& melody, const AlignmentMap& map) {
  std::vector<Onset> onsets;
  onsets.reserve(melody.size());
  for (const auto& n : melody) onsets.push_back({tick_time(map, n.onset_ticks), n.pitch});
  return legato_offsets(onsets, align(map, map.num_beats()));
}

/// Notes at ticks with p(no onset) < tau, timed through the alignment.
inline PerfMelody decode(const Matrix<double>& logits, double tau, const AlignmentMap& map) {
  if (logits.rows != static_cast<std::size_t>(map.num_ticks())) {
    throw ShapeError("logits cover " + std::to_string(logits.rows) + " ticks, alignment " +
                     std::to_string(map.num_ticks()));
  }
  return to_performance(decode_ticks(logits, tau), map);
}

/// Chord track; each chord lasts until the next chord or the segment end.
inline std::vector<TimedChord> decode_chords(const Matrix<double>& logits, double tau) {
  if (logits.cols != static_cast<std::size_t>(kChordClasses)) throw ShapeError("expected chord logits");
  const Matrix<double> probs = softmax_rows(logits);
  const auto ticks = onset_ticks(probs, tau);
  std::vector<TimedChord> out;
  for (std::size_t j = 0; j < ticks.size(); ++j) {
    const int end = j + 1 < ticks.size() ? ticks[j + 1] : static_cast<int>(logits.rows);
    out.push_back({ticks[j], end - ticks[j], chord_from_class_id(best_class(probs, static_cast<std::size_t>(ticks[j])))});
  }
  return out;
}

/// Ground-truth notes recovered from dense labels, timed through `map`.
inline PerfMelody labels_to_performance(const DenseLabelSequence& labels, const AlignmentMap& map) {
  std::vector<Onset> onsets;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.labels[i] != kNoOnset) onsets.push_back({tick_time(map, static_cast<int>(i)), pitch_from_class_id(labels.labels[i])});
  }
  return legato_offsets(onsets, align(map, map.num_beats()));
}

/// Logits that put probability ~1 on each label (used for oracle round trips).
inline Matrix<double> one_hot_logits(const DenseLabelSequence& labels, double margin = 50.0) {
  Matrix<double> out(labels.size(), static_cast<std::size_t>(num_classes(labels.vocab)), 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) out(i, static_cast<std::size_t>(labels.labels[i])) = margin;
  return out;
}

}  // namespace beatscribe
