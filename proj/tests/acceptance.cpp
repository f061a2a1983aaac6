// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "beatscribe/beatscribe.hpp"
#include "gradcheck.hpp"

using namespace beatscribe;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

PerfMelody from_onsets(std::vector<std::pair<double, int>> notes) {
  std::sort(notes.begin(), notes.end());
  std::vector<PerfNote> out;
  for (std::size_t i = 0; i < notes.size(); ++i) {
    if (i > 0 && notes[i].first == notes[i - 1].first) continue;
    out.push_back({notes[i].first, notes[i].first + 0.1, Pitch(notes[i].second)});
  }
  return PerfMelody(out);
}

/// A reference transcript and a noisy estimate of it: jittered onsets,
/// dropped and spurious notes, pitch slips and octave errors.
std::pair<PerfMelody, PerfMelody> random_pair(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, 8);
  std::uniform_real_distribution<double> when(0.0, 10.0);
  std::uniform_real_distribution<double> jitter(-0.08, 0.08);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> pitch(48, 84);
  std::vector<std::pair<double, int>> ref, est;
  const int n = count(rng);
  // clusters of close onsets make the matching ambiguous
  for (int i = 0; i < n; ++i) {
    const double t = (i > 0 && u(rng) < 0.4) ? ref.back().first + 0.03 * u(rng) : when(rng);
    ref.push_back({std::clamp(t, 0.0, 10.0), pitch(rng)});
  }
  for (const auto& [t, p] : ref) {
    if (u(rng) < 0.15) continue;
    int q = p;
    const double r = u(rng);
    if (r < 0.25) q = p + (u(rng) < 0.5 ? -12 : 12);
    else if (r < 0.35) q = p + 1;
    est.push_back({std::clamp(t + jitter(rng), 0.0, 10.0), q});
  }
  while (est.size() < 8 && u(rng) < 0.3) est.push_back({when(rng), pitch(rng)});
  if (est.size() > 8) est.resize(8);
  return {from_onsets(est), from_onsets(ref)};
}

Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  int mismatches = 0;
  int nontrivial = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto [est, ref] = random_pair(rng);
    const EvalReport a = note_f1(est, ref);
    const EvalReport b = oracle_note_f1(est, ref);
    if (!(a.precision == b.precision && a.recall == b.recall && a.f1 == b.f1)) ++mismatches;
    if (a.f1 > 0.0 && a.f1 < 1.0) ++nontrivial;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10.0,
          fmt("1000 pairs, %d mismatches, %d with 0<F1<1, %.2f s", mismatches, nontrivial, secs)};
}

Outcome criterion2() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> count(1, 12);
  std::uniform_int_distribution<int> pitch(Pitch::kMin, Pitch::kMax);
  std::uniform_real_distribution<double> when(0.0, 10.0);
  std::normal_distribution<double> g(0.0, 2.0);
  int eval_checks = 0, eval_fail = 0, loss_checks = 0, loss_fail = 0;
  for (int m = 0; m < 200; ++m) {
    // Each melody stays within a random window so that several shifts fit.
    const int lo = std::uniform_int_distribution<int>(Pitch::kMin, Pitch::kMax - 24)(rng);
    std::uniform_int_distribution<int> near(lo, lo + 24);
    std::vector<std::pair<double, int>> e, r;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      const double t = when(rng);
      r.push_back({t, near(rng)});
      e.push_back({t + 0.03 * (g(rng) / 2.0), near(rng)});
      if (i % 3 == 0) e.back().second = r.back().second;
    }
    const PerfMelody est = from_onsets(e), ref = from_onsets(r);
    const EvalReport base = octave_invariant_f1(est, ref);
    for (int sigma = -8; sigma <= 8; ++sigma) {
      if (sigma == 0 || !octave_shift_feasible(est, sigma)) continue;
      const EvalReport s = octave_invariant_f1(octave_shift(est, sigma), ref);
      ++eval_checks;
      if (!(s.f1 == base.f1 && s.precision == base.precision && s.recall == base.recall)) ++eval_fail;
    }

    const std::size_t ticks = 16 + static_cast<std::size_t>(m % 17);
    DenseLabelSequence labels{Vocabulary::kMelody, std::vector<int>(ticks, kNoOnset)};
    for (std::size_t i = 0; i < ticks; i += 1 + static_cast<std::size_t>(m % 3)) {
      labels.labels[i] = pitch_class_id(Pitch(near(rng)));
    }
    Matrix<double> logits(ticks, kMelodyClasses);
    for (auto& v : logits.data) v = g(rng);
    const double loss = octave_tolerant_loss(logits, labels).loss;
    std::vector<int> shifted;
    for (int sigma = -8; sigma <= 8; ++sigma) {
      if (sigma == 0 || !shift_labels(labels.labels, sigma, shifted)) continue;
      ++loss_checks;
      if (octave_tolerant_loss(logits, octave_shift(labels, sigma)).loss != loss) ++loss_fail;
    }
  }
  return {eval_fail == 0 && loss_fail == 0 && eval_checks > 0 && loss_checks > 0,
          fmt("eval %d/%d shifts equal, loss %d/%d shifts equal", eval_checks - eval_fail, eval_checks,
              loss_checks - loss_fail, loss_checks)};
}

Outcome criterion3() {
  const AlignmentMap map = refine_alignment(constant_tempo_grid(120.0, 1.0, 41, 4), 1.0, 32);
  FeatureMatrix x;
  x.rate_hz = 345.0;
  x.frames = Matrix<float>(static_cast<std::size_t>(345 * 20), 3, 0.0f);
  const auto assign = frame_assignment(x, map);
  std::vector<int> per_tick(static_cast<std::size_t>(map.num_ticks()), 0);
  for (long a : assign) {
    if (a >= 0) ++per_tick[static_cast<std::size_t>(a)];
  }
  const auto [mn, mx] = std::minmax_element(per_tick.begin(), per_tick.end());
  const bool pooling = *mn >= 42 && *mx <= 44;

  double worst = 0.0;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> t{0.5 + u(rng)};
    for (int b = 0; b < 16; ++b) t.push_back(t.back() + 0.3 + 0.7 * u(rng));
    const AlignmentMap m(t);
    FeatureMatrix c;
    c.rate_hz = trial % 2 == 0 ? 345.0 : 31.25;
    const float value = static_cast<float>(-50.0 + 100.0 * u(rng));
    c.frames = Matrix<float>(static_cast<std::size_t>(c.rate_hz * (t.back() + 2.0)), 4, value);
    const auto r = beatwise_resample(c, m);
    for (double v : r.frames.data) worst = std::max(worst, std::abs(v - static_cast<double>(value)));
  }
  return {pooling && worst <= 1e-9,
          fmt("frames per tick in [%d, %d], constant-input max error %.3g", *mn, *mx, worst)};
}

Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  LabelerConfig cfg;  // 2 layers, model_dim 64
  double worst = 0.0;
  std::size_t checked = 0;
  std::string where;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = test_support::gradient_check(cfg, 8, seed, 96);
    checked += r.checked;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      where = r.worst;
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-3 && secs < 120.0,
          fmt("%zu entries over 3 seeds, max rel error %.3g (%s), %.1f s", checked, worst, where.c_str(), secs)};
}

struct SynthCorpus {
  std::vector<SynthSegment> segments;
  std::vector<LabeledExample> examples;
};

SynthCorpus synth_corpus(int count, std::uint64_t seed) {
  SynthCorpus c;
  c.segments = synth_dataset(count, seed);
  std::vector<Segment> segs;
  std::map<std::string, std::string> artist_of;
  for (const auto& s : c.segments) {
    segs.push_back(s.segment);
    artist_of[s.segment.id] = s.segment.id;
  }
  segs = stratified_split(segs, artist_of, {8, 1, 1}, seed);
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const FeatureMatrix mel = logmel(c.segments[i].audio);
    c.examples.push_back(make_example(segs[i], mel, c.segments[i].grid, Vocabulary::kMelody));
  }
  return c;
}

Outcome criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const SynthCorpus corpus = synth_corpus(200, 2024);
  const double prep_s = seconds_since(t0);

  LabelerConfig cfg;
  cfg.seed = 7;
  TrainOptions opt;
  opt.learning_rate = 1e-3;
  opt.batch_size = 8;
  opt.eval_every = 100;
  opt.patience = 6;
  opt.max_steps = 4000;
  const auto result = train(cfg, corpus.examples, opt, [](const ValidationPoint& p) {
    std::fprintf(stderr, "  step %5d  loss %.4f  valid F1 %.4f  tau %.2f%s\n", p.step, p.train_loss, p.f1, p.tau,
                 p.kept ? "  *" : "");
  });

  double sum = 0.0;
  int n_test = 0;
  std::vector<const LabeledExample*> test;
  for (const auto& ex : corpus.examples) {
    if (ex.split != Split::kTest) continue;
    test.push_back(&ex);
    const PerfMelody est = decode(predict_logits(result.best.params, ex.features), result.best.tau, ex.map);
    sum += octave_invariant_f1(est, labels_to_performance(ex.labels, ex.map)).f1;
    ++n_test;
  }
  const double f1 = n_test > 0 ? sum / n_test : 0.0;
  // The prior gets its threshold tuned on the test split itself: an upper
  // bound on what an input-independent model can score there.
  const double prior = prior_baseline(corpus.examples, Vocabulary::kMelody, Split::kTest, opt.thresholds).f1;
  const double secs = seconds_since(t0);
  return {n_test > 0 && f1 >= 0.80 && f1 >= 3.0 * prior,
          fmt("test F1 %.4f on %d segments, prior %.4f (ratio %.2f), tau %.2f, %d steps, %.0f s (features %.0f s)",
              f1, n_test, prior, prior > 0 ? f1 / prior : 0.0, result.best.tau, result.steps_run, secs, prep_s)};
}

Outcome criterion6() {
  int segments = 0, failures = 0;
  auto check = [&](const ScoreMelody& melody, int beats, double bpm) {
    ++segments;
    const auto y = densify(melody, beats);
    const ScoreMelody back = decode_ticks(one_hot_logits(y), 0.5);
    bool same = back.size() == melody.size();
    for (std::size_t i = 0; same && i < back.size(); ++i) {
      same = back[i].onset_ticks == melody[i].onset_ticks && back[i].pitch == melody[i].pitch;
    }
    const AlignmentMap map = refine_alignment(constant_tempo_grid(bpm, 0.7, beats + 1, 4), 0.7, beats);
    std::vector<PerfNote> ref;
    for (const auto& n : melody) {
      ref.push_back({tick_time(map, n.onset_ticks), tick_time(map, n.onset_ticks + n.duration_ticks), n.pitch});
    }
    const EvalReport r = note_f1(decode(one_hot_logits(y), 0.5, map), PerfMelody(ref));
    if (!same || r.f1 != 1.0) ++failures;
  };
  for (const auto& s : synth_dataset(200, 99)) check(s.segment.melody, s.segment.num_beats(), s.bpm);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const int beats = 4 * (1 + k % 8);
    std::vector<ScoreNote> notes;
    for (int t = 0; t < beats * kTicksPerBeat; ++t) {
      if (u(rng) < 0.4) notes.push_back({t, 1, Pitch(Pitch::kMin + static_cast<int>(u(rng) * Pitch::kCount))});
    }
    check(ScoreMelody(notes), beats, 60.0 + 120.0 * u(rng));
  }
  return {failures == 0, fmt("%d segments, %d failures", segments, failures)};
}

Outcome criterion7() {
  int correct = 0;
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (Mode mode : {Mode::kMajor, Mode::kMinor}) {
      std::vector<ScoreNote> notes;
      const auto& off = scale_offsets(mode);
      for (int i = 0; i < 7; ++i) notes.push_back({4 * i, 4, Pitch(60 + tonic + off[static_cast<std::size_t>(i)])});
      notes.push_back({28, 4, Pitch(72 + tonic)});
      if (ks_key(ScoreMelody(notes), {}) == KeySignature{PitchClass(tonic), mode}) ++correct;
    }
  }
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> pitch(55, 80), dur(1, 8);
  int eq_checks = 0, eq_fail = 0;
  for (int m = 0; m < 100; ++m) {
    std::vector<ScoreNote> notes;
    int t = 0;
    for (int i = 0; i < 12; ++i) {
      const int d = dur(rng);
      notes.push_back({t, d, Pitch(pitch(rng))});
      t += d;
    }
    const KeySignature base = ks_key(ScoreMelody(notes), {});
    for (int k = 1; k < 12; ++k) {
      auto moved = notes;
      for (auto& n : moved) n.pitch = Pitch(n.pitch.midi() + k);
      const KeySignature s = ks_key(ScoreMelody(moved), {});
      ++eq_checks;
      if (s.mode != base.mode || s.tonic.value() != (base.tonic.value() + k) % 12) ++eq_fail;
    }
  }
  return {correct == 24 && eq_fail == 0,
          fmt("%d/24 scales, equivariance %d/%d", correct, eq_checks - eq_fail, eq_checks)};
}

Outcome criterion8() {
  std::vector<std::string> bad;
  const SynthCorpus corpus = synth_corpus(20, 31);

  const FeatureMatrix mel = logmel(corpus.segments[0].audio);
  const auto ssft = encode_ssft(mel);
  if (!(decode_ssft(ssft) == mel) || encode_ssft(decode_ssft(ssft)) != ssft) bad.push_back("ssft");

  LabelerConfig cfg;
  cfg.seed = 3;
  TrainOptions opt;
  opt.learning_rate = 1e-3;
  opt.eval_every = 20;
  opt.max_steps = 40;
  const auto a = train(cfg, corpus.examples, opt);
  const auto b = train(cfg, corpus.examples, opt);
  if (!(a.best.params == b.best.params) || a.best.tau != b.best.tau || a.steps_run != b.steps_run) bad.push_back("train");

  const auto ck = encode_checkpoint(a.best);
  if (!(decode_checkpoint(ck) == a.best) || encode_checkpoint(decode_checkpoint(ck)) != ck) bad.push_back("checkpoint");

  for (const auto& s : corpus.segments) {
    const AlignmentMap map = segment_alignment(s.segment, s.grid);
    const std::vector<TimedChord> chords{{0, 16, {s.segment.key.tonic, ChordQuality::kMaj}},
                                         {16, 8, {PitchClass((s.segment.key.tonic.value() + 7) % 12), ChordQuality::kDom7}}};
    auto build = [&] {
      return assemble(s.segment.melody, chords, ks_key(s.segment.melody, chords), s.segment.meter, map);
    };
    if (emit_lilypond(build()) != emit_lilypond(build())) bad.push_back("lilypond " + s.segment.id);
    if (emit_midi(build(), map) != emit_midi(build(), map)) bad.push_back("midi " + s.segment.id);
  }
  std::string detail = bad.empty() ? "ssft, checkpoint, train, 20 LilyPond and MIDI renders identical" : "differs:";
  for (const auto& s : bad) detail += " " + s;
  return {bad.empty(), detail};
}

Outcome criterion9() {
  constexpr int kSteps = 16;  // annotation resolution per beat
  int moved = 0;
  for (int r = 0; r < kSteps; ++r) {
    const double beats = static_cast<double>(r) / kSteps;
    if (quantize_to_tick(beats) * kSteps != r * kTicksPerBeat) ++moved;
  }
  const double analytic = 1.0 - static_cast<double>(kTicksPerBeat) / kSteps;
  const double residue_fraction = static_cast<double>(moved) / kSteps;

  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> step(0, 64 * kSteps - 1);
  const int n = 200000;
  int sampled_moved = 0;
  for (int i = 0; i < n; ++i) {
    const int k = step(rng);
    if (quantize_to_tick(static_cast<double>(k) / kSteps) * kSteps != k * kTicksPerBeat) ++sampled_moved;
  }
  const double sampled = static_cast<double>(sampled_moved) / n;
  const double sd = std::sqrt(analytic * (1 - analytic) / n);

  int grid_moved = 0;
  for (int tick = 0; tick < 64 * kTicksPerBeat * 16; ++tick) {
    if (quantize_to_tick(static_cast<double>(tick) / kTicksPerBeat) != tick) ++grid_moved;
  }
  std::vector<BeatNote> on_grid;
  std::vector<ScoreNote> score;
  for (int tick = 0; tick < 64; tick += 3) {
    on_grid.push_back({static_cast<double>(tick) / kTicksPerBeat, Pitch(60 + tick % 12)});
    score.push_back({tick, 3, Pitch(60 + tick % 12)});
  }
  const auto d = densify(on_grid, 16);
  if (d.collisions != 0 || d.labels.labels != densify(ScoreMelody(score), 16).labels) ++grid_moved;

  return {residue_fraction == analytic && std::abs(sampled - analytic) < 4 * sd && grid_moved == 0,
          fmt("residues %.4f vs analytic %.4f, sampled %.4f (n=%d), on-grid moved %d", residue_fraction, analytic,
              sampled, n, grid_moved)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
                                                       criterion6, criterion7, criterion8, criterion9};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
