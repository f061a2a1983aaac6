#pragma once

// Minibatch training on random beat-aligned slices, with threshold-swept
// validation and early stopping.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "beatscribe/eval.hpp"
#include "beatscribe/labeler/checkpoint.hpp"
#include "beatscribe/labeler/decode.hpp"

namespace beatscribe {

/// Features, targets and alignment for one segment.
struct LabeledExample {
  std::string id;
  ResampledFeatures features;
  DenseLabelSequence labels;
  AlignmentMap map{std::vector<double>{0.0, 1.0}};
  Split split = Split::kTrain;
};

struct TrainOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 8;
  int eval_every = 250;
  int patience = 10;
  int max_steps = 15000;
  int max_slice_beats = 96;
  double max_slice_seconds = 24.0;
  std::vector<double> thresholds = default_thresholds();

  /// 0.05, 0.10, ..., 0.95.
  static std::vector<double> default_thresholds() {
    std::vector<double> t;
    for (int k = 1; k <= 19; ++k) t.push_back(k / 20.0);
    return t;
  }
};

struct ValidationPoint {
  int step = 0;
  double f1 = 0.0;
  double tau = 0.5;
  double train_loss = 0.0;
  bool kept = false;
};

struct TrainResult {
  Checkpoint best;
  double best_f1 = -1.0;
  int steps_run = 0;
  std::vector<ValidationPoint> history;
};

/// Contiguous beat range inside one example.
struct Slice {
  std::size_t example = 0;
  int start_beat = 0;
  int num_beats = 0;
};

/// A random slice of at most `max_slice_beats` beats whose aligned duration
/// is at most `max_slice_seconds` (never shorter than one beat).
template <class Rng>
Slice sample_slice(const LabeledExample& ex, std::size_t index, const TrainOptions& opt, Rng& rng) {
  const int total = ex.map.num_beats();
  const int cap = std::min(opt.max_slice_beats, total);
  std::uniform_int_distribution<int> start_dist(0, total - cap);
  const int start = start_dist(rng);
  const auto& t = ex.map.beat_to_time_s();
  int len = cap;
  while (len > 1 && t[static_cast<std::size_t>(start + len)] - t[static_cast<std::size_t>(start)] > opt.max_slice_seconds) {
    --len;
  }
  return {index, start, len};
}

namespace detail {

template <class T>
Matrix<T> slice_rows(const Matrix<double>& m, std::size_t row0, std::size_t rows) {
  Matrix<T> out(rows, m.cols);
  for (std::size_t i = 0; i < rows * m.cols; ++i) out.data[i] = static_cast<T>(m.data[row0 * m.cols + i]);
  return out;
}

inline double example_f1(const Matrix<double>& logits, const LabeledExample& ex, double tau) {
  if (ex.labels.vocab == Vocabulary::kMelody) {
    return octave_invariant_f1(decode(logits, tau, ex.map), labels_to_performance(ex.labels, ex.map)).f1;
  }
  std::vector<LabeledOnset> est, ref;
  for (const auto& c : decode_chords(logits, tau)) est.push_back({tick_time(ex.map, c.onset_ticks), chord_class_id(c.chord)});
  for (std::size_t i = 0; i < ex.labels.size(); ++i) {
    if (ex.labels.labels[i] != kNoOnset) ref.push_back({tick_time(ex.map, static_cast<int>(i)), ex.labels.labels[i]});
  }
  return labeled_onset_f1(est, ref).f1;
}

}  // namespace detail

struct ThresholdChoice {
  double f1 = 0.0;
  double tau = 0.5;
};

/// Mean per-example F1 at each threshold; returns the best (ties: lowest tau).
inline ThresholdChoice sweep_thresholds(const std::vector<Matrix<double>>& logits,
                                        const std::vector<const LabeledExample*>& examples,
                                        const std::vector<double>& thresholds) {
  ThresholdChoice best{-1.0, thresholds.empty() ? 0.5 : thresholds.front()};
  for (double tau : thresholds) {
    double sum = 0.0;
    for (std::size_t i = 0; i < examples.size(); ++i) sum += detail::example_f1(logits[i], *examples[i], tau);
    const double f1 = examples.empty() ? 0.0 : sum / static_cast<double>(examples.size());
    if (f1 > best.f1) best = {f1, tau};
  }
  return best;
}

template <class T>
ThresholdChoice validate(const LabelerParams<T>& params, const std::vector<const LabeledExample*>& examples,
                         const std::vector<double>& thresholds) {
  std::vector<Matrix<double>> logits;
  logits.reserve(examples.size());
  for (const auto* ex : examples) logits.push_back(predict_logits(params, ex->features));
  return sweep_thresholds(logits, examples, thresholds);
}

/// Log class frequencies over the training split (add-one smoothed): the
/// logits of a model that ignores its input.
inline std::vector<double> class_prior_logits(const std::vector<LabeledExample>& data, Vocabulary vocab) {
  std::vector<double> counts(static_cast<std::size_t>(num_classes(vocab)), 1.0);
  for (const auto& ex : data) {
    if (ex.split != Split::kTrain) continue;
    for (int c : ex.labels.labels) counts[static_cast<std::size_t>(c)] += 1.0;
  }
  double total = 0.0;
  for (double c : counts) total += c;
  for (double& c : counts) c = std::log(c / total);
  return counts;
}

/// Best threshold-swept F1 of the input-independent prior on `split`.
inline ThresholdChoice prior_baseline(const std::vector<LabeledExample>& data, Vocabulary vocab, Split split,
                                      const std::vector<double>& thresholds) {
  const auto prior = class_prior_logits(data, vocab);
  std::vector<Matrix<double>> logits;
  std::vector<const LabeledExample*> examples;
  for (const auto& ex : data) {
    if (ex.split != split) continue;
    Matrix<double> m(ex.labels.size(), prior.size());
    for (std::size_t i = 0; i < m.rows; ++i) std::copy(prior.begin(), prior.end(), m.row(i).begin());
    logits.push_back(std::move(m));
    examples.push_back(&ex);
  }
  return sweep_thresholds(logits, examples, thresholds);
}

/// Adam on mean slice loss. Validation runs every `eval_every` steps; the
/// parameters and threshold with the best validation F1 are kept, and
/// training stops after `patience` validations without improvement.
/// Deterministic for a fixed `config.seed`.
inline TrainResult train(const LabelerConfig& config, const std::vector<LabeledExample>& data,
                         const TrainOptions& opt = {},
                         const std::function<void(const ValidationPoint&)>& on_validation = {}) {
  config.validate();
  std::vector<std::size_t> train_idx;
  std::vector<const LabeledExample*> valid;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& ex = data[i];
    if (ex.labels.vocab != config.vocab) throw InputError("example '" + ex.id + "' has the wrong vocabulary");
    if (ex.features.dim() != static_cast<std::size_t>(config.input_dim)) {
      throw ShapeError("example '" + ex.id + "' has feature dim " + std::to_string(ex.features.dim()));
    }
    if (ex.features.ticks() != ex.labels.size() || static_cast<int>(ex.labels.size()) != ex.map.num_ticks()) {
      throw ShapeError("example '" + ex.id + "' has inconsistent tick counts");
    }
    if (ex.split == Split::kTrain) train_idx.push_back(i);
    if (ex.split == Split::kValid) valid.push_back(&ex);
  }
  if (train_idx.empty()) throw InputError("training split is empty");
  if (valid.empty()) throw InputError("validation split is empty");
  if (opt.batch_size < 1 || opt.eval_every < 1 || opt.max_steps < 1) throw InputError("invalid training options");
  TrainOptions eff = opt;
  eff.max_slice_beats = std::min(opt.max_slice_beats, config.max_ticks / kTicksPerBeat);

  LabelerParams<float> params = init_params<float>(config);
  const std::size_t n_params = params.values.size();
  std::vector<float> grad(n_params), m(n_params, 0.0f), v(n_params, 0.0f);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick(0, train_idx.size() - 1);

  TrainResult result;
  int since_best = 0;
  double loss_acc = 0.0;
  int loss_count = 0;
  for (int step = 1; step <= eff.max_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0f);
    for (int b = 0; b < eff.batch_size; ++b) {
      const std::size_t idx = train_idx[pick(rng)];
      const auto& ex = data[idx];
      const Slice s = sample_slice(ex, idx, eff, rng);
      const auto row0 = static_cast<std::size_t>(s.start_beat * kTicksPerBeat);
      const auto rows = static_cast<std::size_t>(s.num_beats * kTicksPerBeat);
      const Matrix<float> x = detail::slice_rows<float>(ex.features.frames, row0, rows);
      DenseLabelSequence y{ex.labels.vocab,
                           std::vector<int>(ex.labels.labels.begin() + static_cast<std::ptrdiff_t>(row0),
                                            ex.labels.labels.begin() + static_cast<std::ptrdiff_t>(row0 + rows))};
      loss_acc += loss_and_gradient(params, x, y, grad).loss;
      ++loss_count;
    }
    const double bc1 = 1.0 - std::pow(eff.beta1, step);
    const double bc2 = 1.0 - std::pow(eff.beta2, step);
    const auto inv_batch = static_cast<float>(1.0 / eff.batch_size);
    for (std::size_t i = 0; i < n_params; ++i) {
      const float gi = grad[i] * inv_batch;
      m[i] = static_cast<float>(eff.beta1) * m[i] + static_cast<float>(1.0 - eff.beta1) * gi;
      v[i] = static_cast<float>(eff.beta2) * v[i] + static_cast<float>(1.0 - eff.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params.values[i] -= static_cast<float>(eff.learning_rate * mhat / (std::sqrt(vhat) + eff.adam_eps));
    }

    if (step % eff.eval_every != 0 && step != eff.max_steps) continue;
    const ThresholdChoice choice = validate(params, valid, eff.thresholds);
    ValidationPoint point{step, choice.f1, choice.tau, loss_acc / std::max(1, loss_count), false};
    loss_acc = 0.0;
    loss_count = 0;
    if (choice.f1 > result.best_f1) {
      result.best_f1 = choice.f1;
      result.best.params = params;
      result.best.tau = choice.tau;
      result.best.steps = step;
      point.kept = true;
      since_best = 0;
    } else {
      ++since_best;
    }
    result.history.push_back(point);
    result.steps_run = step;
    if (on_validation) on_validation(point);
    if (since_best >= eff.patience) break;
  }
  return result;
}

}  // namespace beatscribe
