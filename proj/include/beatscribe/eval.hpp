#pragma once

// Onset-only note-wise F-measure, its octave-invariant variant, and an
// exhaustive-enumeration oracle for small instances.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <span>
#include <vector>

#include "beatscribe/core.hpp"

namespace beatscribe {

inline constexpr double kDefaultOnsetTolerance = 0.05;

/// Slack on the tolerance comparison so that shifting both transcripts by
/// the same offset cannot flip a boundary pair through rounding.
inline constexpr double kOnsetToleranceSlack = 1e-9;

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int best_sigma = 0;
  int matched = 0;  // onset-matched pairs
  int correct = 0;  // matched pairs with equal labels

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// An onset carrying an integer label (MIDI pitch, chord class, ...).
struct LabeledOnset {
  double onset_s;
  int label;
};

inline bool onsets_match(double a, double b, double tol_s) {
  return std::abs(a - b) <= tol_s + kOnsetToleranceSlack;
}

/// Precision/recall/F1 from counts. Both sides empty scores 1.
inline EvalReport score_counts(std::size_t n_est, std::size_t n_ref, int matched, int correct) {
  EvalReport r;
  r.matched = matched;
  r.correct = correct;
  if (n_est == 0 && n_ref == 0) {
    r.precision = r.recall = r.f1 = 1.0;
    return r;
  }
  r.precision = n_est == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n_est);
  r.recall = n_ref == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(n_ref);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

namespace detail {

/// Maximum-cardinality bipartite matching on onset proximity; among the
/// maximum matchings, one with the most label-equal pairs. Solved as
/// min-cost flow with successive shortest (Bellman-Ford queue) paths.
class OnsetMatcher {
 public:
  OnsetMatcher(std::span<const LabeledOnset> est, std::span<const LabeledOnset> ref, double tol_s)
      : n_est_(est.size()), n_ref_(ref.size()) {
    const std::size_t n = n_est_ + n_ref_ + 2;
    graph_.resize(n);
    const long big = static_cast<long>(std::min(n_est_, n_ref_)) + 1;
    for (std::size_t i = 0; i < n_est_; ++i) add_edge(source(), est_node(i), 0);
    for (std::size_t j = 0; j < n_ref_; ++j) add_edge(ref_node(j), sink(), 0);
    // Both lists are sorted by onset, so candidate refs form a sliding window.
    std::size_t lo = 0;
    for (std::size_t i = 0; i < n_est_; ++i) {
      while (lo < n_ref_ && ref[lo].onset_s < est[i].onset_s - tol_s - kOnsetToleranceSlack) ++lo;
      for (std::size_t j = lo; j < n_ref_ && ref[j].onset_s <= est[i].onset_s + tol_s + kOnsetToleranceSlack; ++j) {
        if (!onsets_match(est[i].onset_s, ref[j].onset_s, tol_s)) continue;
        const long weight = big + (est[i].label == ref[j].label ? 1 : 0);
        add_edge(est_node(i), ref_node(j), -weight);
      }
    }
  }

  /// Returns {matched pairs, label-equal pairs}.
  std::pair<int, int> solve() {
    long total = 0;
    int flow = 0;
    while (augment(total)) ++flow;
    int correct = 0;
    const long big = static_cast<long>(std::min(n_est_, n_ref_)) + 1;
    // Total weight = flow * big + correct.
    correct = static_cast<int>(-total - flow * big);
    return {flow, correct};
  }

 private:
  struct Edge {
    std::size_t to;
    std::size_t rev;
    int cap;
    long cost;
  };

  std::size_t source() const { return n_est_ + n_ref_; }
  std::size_t sink() const { return n_est_ + n_ref_ + 1; }
  std::size_t est_node(std::size_t i) const { return i; }
  std::size_t ref_node(std::size_t j) const { return n_est_ + j; }

  void add_edge(std::size_t a, std::size_t b, long cost) {
    graph_[a].push_back({b, graph_[b].size(), 1, cost});
    graph_[b].push_back({a, graph_[a].size() - 1, 0, -cost});
  }

  bool augment(long& total) {
    const std::size_t n = graph_.size();
    constexpr long kInf = std::numeric_limits<long>::max();
    std::vector<long> dist(n, kInf);
    std::vector<std::size_t> prev_node(n), prev_edge(n);
    std::vector<bool> queued(n, false);
    std::deque<std::size_t> q{source()};
    dist[source()] = 0;
    queued[source()] = true;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop_front();
      queued[u] = false;
      for (std::size_t e = 0; e < graph_[u].size(); ++e) {
        const Edge& ed = graph_[u][e];
        if (ed.cap <= 0 || dist[u] + ed.cost >= dist[ed.to]) continue;
        dist[ed.to] = dist[u] + ed.cost;
        prev_node[ed.to] = u;
        prev_edge[ed.to] = e;
        if (!queued[ed.to]) {
          queued[ed.to] = true;
          q.push_back(ed.to);
        }
      }
    }
    // Every augmenting path has negative cost, so stop only when none exists.
    if (dist[sink()] == kInf) return false;
    for (std::size_t v = sink(); v != source(); v = prev_node[v]) {
      Edge& ed = graph_[prev_node[v]][prev_edge[v]];
      ed.cap -= 1;
      graph_[v][ed.rev].cap += 1;
    }
    total += dist[sink()];
    return true;
  }

  std::size_t n_est_;
  std::size_t n_ref_;
  std::vector<std::vector<Edge>> graph_;
};

template <class Note>
std::vector<LabeledOnset> labeled(const Melody<Note>& m) {
  std::vector<LabeledOnset> out;
  out.reserve(m.size());
  for (const auto& n : m) out.push_back({static_cast<double>(detail::onset_of(n)), n.pitch.midi()});
  return out;
}

}  // namespace detail

/// F-measure over labeled onsets sorted by time. Matching uses onsets only;
/// label equality decides which matched pairs count as correct.
inline EvalReport labeled_onset_f1(std::span<const LabeledOnset> est, std::span<const LabeledOnset> ref,
                                   double tol_s = kDefaultOnsetTolerance) {
  detail::OnsetMatcher matcher(est, ref, tol_s);
  const auto [matched, correct] = matcher.solve();
  return score_counts(est.size(), ref.size(), matched, correct);
}

inline EvalReport note_f1(const PerfMelody& estimate, const PerfMelody& reference,
                          double tol_s = kDefaultOnsetTolerance) {
  const auto est = detail::labeled(estimate);
  const auto ref = detail::labeled(reference);
  return labeled_onset_f1(est, ref, tol_s);
}

/// Best note_f1 over whole-octave shifts of the estimate in -8..8 that keep
/// it in range. Shifts are tried in order 0, -1, +1, -2, +2, ...; a later
/// shift replaces the best only if strictly better.
inline EvalReport octave_invariant_f1(const PerfMelody& estimate, const PerfMelody& reference,
                                      double tol_s = kDefaultOnsetTolerance) {
  EvalReport best = note_f1(estimate, reference, tol_s);
  best.best_sigma = 0;
  for (int k = 1; k <= 8; ++k) {
    for (int sigma : {-k, k}) {
      if (!octave_shift_feasible(estimate, sigma)) continue;
      EvalReport r = note_f1(octave_shift(estimate, sigma), reference, tol_s);
      if (r.f1 > best.f1) {
        r.best_sigma = sigma;
        best = r;
      }
    }
  }
  return best;
}

/// Exhaustive enumeration over every injective onset matching; picks the
/// largest matching, then the most label-equal pairs. At most 8 notes a side.
inline EvalReport oracle_note_f1(const PerfMelody& estimate, const PerfMelody& reference,
                                 double tol_s = kDefaultOnsetTolerance) {
  if (estimate.size() > 8 || reference.size() > 8) throw InputError("oracle is limited to 8 notes per side");
  const auto& est = estimate.notes();
  const auto& ref = reference.notes();
  std::vector<bool> used(ref.size(), false);
  int best_matched = 0;
  int best_correct = 0;
  auto rec = [&](auto&& self, std::size_t i, int matched, int correct) -> void {
    if (i == est.size()) {
      if (matched > best_matched || (matched == best_matched && correct > best_correct)) {
        best_matched = matched;
        best_correct = correct;
      }
      return;
    }
    self(self, i + 1, matched, correct);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      if (used[j] || !onsets_match(est[i].onset_s, ref[j].onset_s, tol_s)) continue;
      used[j] = true;
      self(self, i + 1, matched + 1, correct + (est[i].pitch == ref[j].pitch ? 1 : 0));
      used[j] = false;
    }
  };
  rec(rec, 0, 0, 0);
  return score_counts(est.size(), ref.size(), best_matched, best_correct);
}

}  // namespace beatscribe
