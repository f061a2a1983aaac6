#pragma once

// Glue between the stages: segment + audio features + beat grid -> a
// labeled example, and checkpoint + features -> transcript.

#include "beatscribe/align.hpp"
#include "beatscribe/features.hpp"
#include "beatscribe/labeler/checkpoint.hpp"
#include "beatscribe/labeler/decode.hpp"
#include "beatscribe/labeler/labels.hpp"
#include "beatscribe/labeler/train.hpp"

namespace beatscribe {

inline AlignmentMap segment_alignment(const Segment& seg, const BeatGrid& grid) {
  return refine_alignment(grid, seg.user_start_s, seg.num_beats());
}

inline DenseLabelSequence segment_labels(const Segment& seg, Vocabulary vocab) {
  if (vocab == Vocabulary::kMelody) return densify(seg.melody, seg.num_beats());
  return densify_chords(seg.chords, seg.num_beats());
}

/// Beat-wise features and dense targets for one annotated segment.
inline LabeledExample make_example(const Segment& seg, const FeatureMatrix& features, const BeatGrid& grid,
                                   Vocabulary vocab) {
  LabeledExample ex;
  ex.id = seg.id;
  ex.map = segment_alignment(seg, grid);
  ex.features = beatwise_resample(features, ex.map);
  ex.labels = segment_labels(seg, vocab);
  ex.split = seg.split.value_or(Split::kTrain);
  return ex;
}

/// Melody transcript of already beat-resampled features.
inline PerfMelody transcribe(const Checkpoint& ck, const ResampledFeatures& x, const AlignmentMap& map) {
  return decode(predict_logits(ck.params, x), ck.tau, map);
}

}  // namespace beatscribe
