// beatscribe command-line tool. JSON results go to stdout, diagnostics to
// stderr. Exit codes: 0 success, 1 validation or data error, 2 missing input.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "beatscribe/beatscribe.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace beatscribe;

namespace {

struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::string& need_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw MissingInput("no such file: " + path);
  return path;
}

const std::string& need_dir(const std::string& path) {
  if (!fs::is_directory(path)) throw MissingInput("no such directory: " + path);
  return path;
}

std::string slurp(const std::string& path) {
  const auto bytes = detail::read_file(need_file(path));
  return {bytes.begin(), bytes.end()};
}

json read_json(const std::string& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

/// Sorted *.json files of a directory, minus the artist table.
std::vector<fs::path> json_files(const std::string& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(need_dir(dir))) {
    if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "artists.json") {
      out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool is_ssft(const std::string& path) { return fs::path(path).extension() == ".ssft"; }

/// Time-rate features of a recording: an SSFT file as is, anything else is
/// read as WAV and log-mel featurized.
FeatureMatrix load_time_features(const std::string& path) {
  need_file(path);
  return is_ssft(path) ? load_features(path) : logmel(read_wav(path));
}

AlignmentMap alignment_for(const BeatGrid& grid, double start_s, std::optional<int> beats) {
  if (beats) return refine_alignment(grid, start_s, *beats);
  // all grid beats after the chosen downbeat
  const AlignmentMap probe = refine_alignment(grid, start_s, 1);
  const auto& t = grid.beat_times_s();
  const auto first = std::lower_bound(t.begin(), t.end(), probe.beat_to_time_s().front()) - t.begin();
  const int remaining = static_cast<int>(t.size()) - static_cast<int>(first) - 1;
  if (remaining < 1) throw InputError("beat grid ends at the chosen downbeat");
  return refine_alignment(grid, start_s, remaining);
}

json transcript_json(const PerfMelody& m) {
  json notes = json::array();
  for (const auto& n : m) notes.push_back({{"onset_s", n.onset_s}, {"offset_s", n.offset_s}, {"midi", n.pitch.midi()}});
  return notes;
}

PerfMelody transcript_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("notes") || !j["notes"].is_array()) {
    throw FormatError(where + ": expected an object with a \"notes\" array");
  }
  std::vector<PerfNote> notes;
  for (const auto& n : j["notes"]) {
    notes.push_back({n.at("onset_s").get<double>(), n.at("offset_s").get<double>(), Pitch(n.at("midi").get<int>())});
  }
  return PerfMelody(std::move(notes));
}

json report_json(const EvalReport& r) {
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
          {"best_sigma", r.best_sigma}, {"matched", r.matched}, {"correct", r.correct}};
}

std::string key_name(KeySignature k) {
  static constexpr const char* kNames[] = {"C", "C#", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B"};
  return std::string(kNames[k.tonic.value()]) + " " + std::string(to_string(k.mode));
}

Meter parse_meter_flag(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) throw InputError("meter must look like 4/4");
  try {
    return Meter(std::stoi(s.substr(0, slash)), std::stoi(s.substr(slash + 1)));
  } catch (const std::logic_error&) {
    throw InputError("meter must look like 4/4, got '" + s + "'");
  }
}

// ---------------------------------------------------------------------------

void dataset_convert(const std::string& in_dir, const std::string& out_dir, int jobs) {
  const auto files = json_files(in_dir);
  fs::create_directories(out_dir);
  struct Result {
    std::optional<Segment> seg;
    std::string artist;
    std::vector<std::string> warnings;
    std::string error;
  };
  std::vector<Result> results(files.size());
  auto work = [&](std::size_t i) {
    try {
      const std::string text = slurp(files[i].string());
      auto parsed = parse_segment_verbose(text);
      results[i].artist = functional_artist(text).value_or(parsed.segment.id);
      results[i].warnings = std::move(parsed.warnings);
      results[i].seg = std::move(parsed.segment);
    } catch (const Error& e) {
      results[i].error = e.what();
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t n_jobs = static_cast<std::size_t>(std::max(1, jobs));
    for (std::size_t w = 0; w < n_jobs; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < files.size(); i += n_jobs) work(i);
      });
    }
  }

  json artists = json::object();
  if (fs::is_regular_file(fs::path(out_dir) / "artists.json")) artists = read_json((fs::path(out_dir) / "artists.json").string());
  json rejected = json::array(), warnings = json::array();
  int converted = 0;
  std::map<std::string, std::string> seen;
  for (std::size_t i = 0; i < files.size(); ++i) {
    auto& r = results[i];
    const std::string name = files[i].filename().string();
    if (r.seg && seen.count(r.seg->id)) r.error = "duplicate id '" + r.seg->id + "' (also in " + seen[r.seg->id] + ")";
    if (!r.error.empty()) {
      rejected.push_back({{"file", name}, {"reason", r.error}});
      continue;
    }
    seen[r.seg->id] = name;
    write_text((fs::path(out_dir) / (r.seg->id + ".json")).string(), to_absolute_json(*r.seg).dump(2) + "\n");
    artists[r.seg->id] = r.artist;
    for (const auto& w : r.warnings) warnings.push_back({{"file", name}, {"warning", w}});
    ++converted;
  }
  write_text((fs::path(out_dir) / "artists.json").string(), artists.dump(2) + "\n");
  emit({{"converted", converted}, {"rejected_count", rejected.size()}, {"rejected", rejected}, {"warnings", warnings}});
}

void dataset_split(const std::string& dir, std::uint64_t seed, const std::vector<int>& ratios) {
  if (ratios.size() != 3) throw InputError("--ratios takes three integers");
  std::vector<Segment> segs;
  std::map<std::string, fs::path> path_of;
  for (const auto& p : json_files(dir)) {
    segs.push_back(parse_absolute_segment(slurp(p.string())));
    path_of[segs.back().id] = p;
  }
  std::map<std::string, std::string> artist_of;
  json artists = json::object();
  if (fs::is_regular_file(fs::path(dir) / "artists.json")) artists = read_json((fs::path(dir) / "artists.json").string());
  for (const auto& s : segs) {
    artist_of[s.id] = artists.contains(s.id) ? artists[s.id].get<std::string>() : s.id;
  }
  segs = stratified_split(std::move(segs), artist_of, {ratios[0], ratios[1], ratios[2]}, seed);
  std::map<std::string, int> counts{{"train", 0}, {"valid", 0}, {"test", 0}};
  for (const auto& s : segs) {
    write_text(path_of.at(s.id).string(), to_absolute_json(s).dump(2) + "\n");
    ++counts[std::string(to_string(*s.split))];
  }
  emit({{"seed", seed}, {"segments", segs.size()}, {"counts", counts}});
}

void dataset_synth(const std::string& out_dir, int count, std::uint64_t seed) {
  if (count < 1) throw InputError("--count must be positive");
  fs::create_directories(fs::path(out_dir) / "segments");
  fs::create_directories(fs::path(out_dir) / "audio");
  fs::create_directories(fs::path(out_dir) / "beats");
  for (const auto& s : synth_dataset(count, seed)) {
    write_text((fs::path(out_dir) / "segments" / (s.segment.id + ".json")).string(),
               to_absolute_json(s.segment).dump(2) + "\n");
    write_wav((fs::path(out_dir) / "audio" / s.segment.audio_ref).string(), s.audio);
    write_text((fs::path(out_dir) / "beats" / (s.segment.id + ".json")).string(), to_json(s.grid).dump(2) + "\n");
  }
  emit({{"segments", count}, {"seed", seed}, {"dir", out_dir}});
}

void align_refine(const std::string& seg_path, const std::string& grid_path, const std::string& out) {
  const Segment seg = parse_absolute_segment(slurp(seg_path));
  const BeatGrid grid = beat_grid_from_json(read_json(grid_path));
  const json j = to_json(segment_alignment(seg, grid));
  if (!out.empty()) write_text(out, j.dump(2) + "\n");
  emit(j);
}

void features_mel(const std::string& wav, const std::string& out) {
  const FeatureMatrix x = logmel(read_wav(need_file(wav)));
  save_features(out, x);
  emit({{"frames", x.num_frames()}, {"dim", x.dim()}, {"rate_hz", x.rate_hz}});
}

void features_resample(const std::string& in, const std::string& alignment, const std::string& out) {
  const FeatureMatrix x = load_features(need_file(in));
  const AlignmentMap map = alignment_from_json(read_json(alignment));
  const ResampledFeatures r = beatwise_resample(x, map);
  save_features(out, as_feature_matrix(r));
  emit({{"ticks", r.ticks()}, {"dim", r.dim()}, {"beats", map.num_beats()}});
}

// ---------------------------------------------------------------------------
// Training runs.

struct RunConfig {
  std::string dataset_dir;
  std::string beatgrid_dir;
  std::string audio_dir;
  std::vector<std::string> feature_dirs;
  std::string feature_source = "mel";  // mel | imported | concat
  std::string checkpoint = "labeler.bsck";
  std::string output_dir;
  LabelerConfig labeler;
  TrainOptions train;
};

RunConfig run_config_from_json(const json& j) {
  static const std::vector<std::string> kKeys{"dataset_dir", "beatgrid_dir", "audio_dir", "feature_dirs",
                                              "feature_source", "checkpoint", "output_dir", "labeler", "train",
                                              "seed"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(kKeys.begin(), kKeys.end(), k) == kKeys.end()) throw FormatError("unknown run config field '" + k + "'");
  }
  RunConfig c;
  auto str = [&](const char* k, std::string& dst) {
    if (j.contains(k)) dst = j[k].get<std::string>();
  };
  str("dataset_dir", c.dataset_dir);
  str("beatgrid_dir", c.beatgrid_dir);
  str("audio_dir", c.audio_dir);
  str("feature_source", c.feature_source);
  str("checkpoint", c.checkpoint);
  str("output_dir", c.output_dir);
  if (j.contains("feature_dirs")) c.feature_dirs = j["feature_dirs"].get<std::vector<std::string>>();
  if (j.contains("labeler")) c.labeler = labeler_config_from_json(j["labeler"]);
  if (j.contains("seed")) c.labeler.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("train")) {
    const json& t = j["train"];
    for (const auto& [k, v] : t.items()) {
      if (k == "learning_rate") c.train.learning_rate = v.get<double>();
      else if (k == "batch_size") c.train.batch_size = v.get<int>();
      else if (k == "eval_every") c.train.eval_every = v.get<int>();
      else if (k == "patience") c.train.patience = v.get<int>();
      else if (k == "max_steps") c.train.max_steps = v.get<int>();
      else if (k == "max_slice_beats") c.train.max_slice_beats = v.get<int>();
      else if (k == "max_slice_seconds") c.train.max_slice_seconds = v.get<double>();
      else throw FormatError("unknown train option '" + k + "'");
    }
  }
  return c;
}

/// Beat-resampled features for one segment according to the run config.
ResampledFeatures run_features(const RunConfig& c, const Segment& seg, const AlignmentMap& map) {
  if (c.feature_source == "mel") {
    const std::string dir = c.audio_dir.empty() ? c.dataset_dir : c.audio_dir;
    return beatwise_resample(logmel(read_wav(need_file((fs::path(dir) / seg.audio_ref).string()))), map);
  }
  if (c.feature_source != "imported" && c.feature_source != "concat") {
    throw InputError("feature_source must be mel, imported or concat");
  }
  if (c.feature_dirs.empty()) throw InputError("feature_dirs is empty");
  if (c.feature_source == "imported" && c.feature_dirs.size() != 1) throw InputError("imported takes one feature dir");
  std::vector<ResampledFeatures> parts;
  for (const auto& d : c.feature_dirs) {
    parts.push_back(beatwise_resample(load_features(need_file((fs::path(d) / (seg.id + ".ssft")).string())), map));
  }
  return parts.size() == 1 ? parts.front() : concat_features(parts);
}

void train_cmd(const std::string& config_path, std::optional<std::uint64_t> seed, std::optional<int> max_steps,
               std::optional<double> lr, const std::string& checkpoint_flag) {
  RunConfig c = run_config_from_json(read_json(config_path));
  if (seed) c.labeler.seed = *seed;
  if (max_steps) c.train.max_steps = *max_steps;
  if (lr) c.train.learning_rate = *lr;
  if (!checkpoint_flag.empty()) c.checkpoint = checkpoint_flag;
  need_dir(c.dataset_dir);
  need_dir(c.beatgrid_dir);
  for (const auto& d : c.feature_dirs) need_dir(d);

  std::vector<LabeledExample> data;
  for (const auto& p : json_files(c.dataset_dir)) {
    const Segment seg = parse_absolute_segment(slurp(p.string()));
    const BeatGrid grid = beat_grid_from_json(read_json((fs::path(c.beatgrid_dir) / (seg.id + ".json")).string()));
    LabeledExample ex;
    ex.id = seg.id;
    ex.map = segment_alignment(seg, grid);
    ex.features = run_features(c, seg, ex.map);
    ex.labels = segment_labels(seg, c.labeler.vocab);
    ex.split = seg.split.value_or(Split::kTrain);
    data.push_back(std::move(ex));
  }
  if (!data.empty() && c.labeler.input_dim != static_cast<int>(data.front().features.dim())) {
    std::cerr << "input_dim set to feature width " << data.front().features.dim() << "\n";
    c.labeler.input_dim = static_cast<int>(data.front().features.dim());
  }

  json history = json::array();
  TrainResult r = train(c.labeler, data, c.train, [&](const ValidationPoint& p) {
    std::cerr << "step " << p.step << " loss " << p.train_loss << " valid_f1 " << p.f1 << " tau " << p.tau
              << (p.kept ? " (best)" : "") << "\n";
    history.push_back({{"step", p.step}, {"train_loss", p.train_loss}, {"f1", p.f1}, {"tau", p.tau}, {"kept", p.kept}});
  });
  r.best.metadata["feature_source"] = c.feature_source;
  r.best.metadata["valid_f1"] = r.best_f1;
  save_checkpoint(c.checkpoint, r.best);
  const json out{{"checkpoint", c.checkpoint}, {"best_f1", r.best_f1}, {"tau", r.best.tau},
                 {"best_step", r.best.steps}, {"steps_run", r.steps_run}, {"history", history}};
  if (!c.output_dir.empty()) write_text((fs::path(c.output_dir) / "train_log.json").string(), out.dump(2) + "\n");
  emit(out);
}

// ---------------------------------------------------------------------------

struct Placement {
  double start_s = 0.0;
  std::optional<int> beats;
};

void transcribe_cmd(const std::string& input, const std::string& grid_path, const std::string& ck_path,
                    const Placement& at, const std::string& midi_out, const std::string& out) {
  const Checkpoint ck = load_checkpoint(need_file(ck_path));
  if (ck.params.config.vocab != Vocabulary::kMelody) throw InputError("transcribe needs a melody checkpoint");
  const AlignmentMap map = alignment_for(beat_grid_from_json(read_json(grid_path)), at.start_s, at.beats);
  const auto x = beatwise_resample(load_time_features(input), map);
  const Matrix<double> logits = predict_logits(ck.params, x);
  const ScoreMelody ticks = decode_ticks(logits, ck.tau);
  const json j{{"tau", ck.tau}, {"beats", map.num_beats()}, {"notes", transcript_json(to_performance(ticks, map))}};
  if (!out.empty()) write_text(out, j.dump(2) + "\n");
  if (!midi_out.empty()) {
    KeySignature key{PitchClass(0), Mode::kMajor};
    if (!ticks.empty()) key = ks_key(ticks, {});
    write_midi(midi_out, assemble(ticks, {}, key, Meter(4, 4), map), map);
  }
  emit(j);
}

void evaluate_cmd(const std::string& est_path, const std::string& ref_path, const std::string& grid_path, double tol) {
  const PerfMelody est = transcript_from_json(read_json(est_path), est_path);
  const json ref_doc = read_json(ref_path);
  PerfMelody ref;
  if (ref_doc.contains("melody")) {
    // an annotated segment: place its melody through the beat grid
    if (grid_path.empty()) throw InputError("a segment reference needs --beatgrid");
    const Segment seg = segment_from_absolute_json(ref_doc);
    ref = to_performance(seg.melody, segment_alignment(seg, beat_grid_from_json(read_json(grid_path))));
  } else {
    ref = transcript_from_json(ref_doc, ref_path);
  }
  emit(report_json(octave_invariant_f1(est, ref, tol)));
}

void leadsheet_cmd(const std::string& input, const std::string& grid_path, const std::string& melody_ck,
                   const std::string& chord_ck, const std::string& meter_s, const Placement& at,
                   const std::string& ly_out, const std::string& midi_out) {
  const Meter meter = parse_meter_flag(meter_s);
  const Checkpoint mck = load_checkpoint(need_file(melody_ck));
  if (mck.params.config.vocab != Vocabulary::kMelody) throw InputError("--melody-ckpt is not a melody checkpoint");
  std::optional<Checkpoint> cck;
  if (!chord_ck.empty()) {
    cck = load_checkpoint(need_file(chord_ck));
    if (cck->params.config.vocab != Vocabulary::kChord) throw InputError("--chord-ckpt is not a chord checkpoint");
  }
  const BeatGrid grid = beat_grid_from_json(read_json(grid_path));
  AlignmentMap map = alignment_for(grid, at.start_s, at.beats);
  if (!at.beats && map.num_beats() % meter.beats_per_bar() != 0) {
    map = refine_alignment(grid, at.start_s, map.num_beats() - map.num_beats() % meter.beats_per_bar());
  }
  const auto x = beatwise_resample(load_time_features(input), map);
  const ScoreMelody melody = decode_ticks(predict_logits(mck.params, x), mck.tau);
  std::vector<TimedChord> chords;
  if (cck) chords = decode_chords(predict_logits(cck->params, x), cck->tau);
  KeySignature key{PitchClass(0), Mode::kMajor};
  if (!melody.empty() || !chords.empty()) key = ks_key(melody, chords);
  const LeadSheet sheet = assemble(melody, chords, key, meter, map);
  write_text(ly_out, emit_lilypond(sheet));
  if (!midi_out.empty()) write_midi(midi_out, sheet, map);
  emit({{"key", key_name(key)}, {"tempo_bpm", sheet.tempo_bpm}, {"notes", melody.size()}, {"chords", chords.size()},
        {"lilypond", ly_out}, {"midi", midi_out}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beatscribe: beat-aligned melody transcription and lead sheets"};
  app.require_subcommand(1);

  auto* dataset = app.add_subcommand("dataset", "annotation conversion and splits");
  dataset->require_subcommand(1);
  std::string conv_in, conv_out;
  int jobs = 1;
  auto* convert = dataset->add_subcommand("convert", "functional annotations -> absolute segment JSON");
  convert->add_option("functional-dir", conv_in)->required();
  convert->add_option("out-dir", conv_out)->required();
  convert->add_option("--jobs", jobs, "parallel workers")->check(CLI::PositiveNumber);

  std::string split_dir;
  std::uint64_t split_seed = 0;
  std::vector<int> ratios{8, 1, 1};
  auto* split = dataset->add_subcommand("split", "artist-stratified train/valid/test assignment (in place)");
  split->add_option("dir", split_dir)->required();
  split->add_option("--seed", split_seed);
  split->add_option("--ratios", ratios)->expected(3);

  std::string synth_out;
  int synth_count = 20;
  std::uint64_t synth_seed = 0;
  auto* synth = dataset->add_subcommand("synth", "synthetic sine melodies: segments, WAV audio and beat grids");
  synth->add_option("out-dir", synth_out)->required();
  synth->add_option("--count", synth_count);
  synth->add_option("--seed", synth_seed);

  auto* align_cmd = app.add_subcommand("align", "beat alignment");
  align_cmd->require_subcommand(1);
  std::string al_seg, al_grid, al_out;
  auto* refine = align_cmd->add_subcommand("refine", "alignment of a segment against a beat grid");
  refine->add_option("segment", al_seg)->required();
  refine->add_option("beatgrid", al_grid)->required();
  refine->add_option("-o,--out", al_out);

  auto* features = app.add_subcommand("features", "feature extraction and resampling");
  features->require_subcommand(1);
  std::string fm_wav, fm_out;
  auto* mel = features->add_subcommand("mel", "log-mel spectrogram of a WAV file");
  mel->add_option("wav", fm_wav)->required();
  mel->add_option("out", fm_out)->required();
  std::string fr_in, fr_align, fr_out;
  auto* res = features->add_subcommand("resample", "pool features onto the sixteenth-note grid");
  res->add_option("in", fr_in)->required();
  res->add_option("alignment", fr_align)->required();
  res->add_option("out", fr_out)->required();

  std::string tr_config, tr_ck;
  std::optional<std::uint64_t> tr_seed;
  std::optional<int> tr_steps;
  std::optional<double> tr_lr;
  auto* train_sc = app.add_subcommand("train", "train a labeler from a run config");
  train_sc->add_option("--config", tr_config)->required();
  train_sc->add_option("--seed", tr_seed);
  train_sc->add_option("--max-steps", tr_steps);
  train_sc->add_option("--learning-rate", tr_lr);
  train_sc->add_option("--checkpoint", tr_ck);

  Placement at;
  std::optional<int> beats;
  std::string tx_in, tx_grid, tx_ck, tx_midi, tx_out;
  auto* tx = app.add_subcommand("transcribe", "melody transcript of a recording");
  tx->add_option("input", tx_in, "WAV or SSFT")->required();
  tx->add_option("beatgrid", tx_grid)->required();
  tx->add_option("--checkpoint", tx_ck)->required();
  tx->add_option("--start", at.start_s, "seconds near the first downbeat");
  tx->add_option("--beats", beats);
  tx->add_option("--midi", tx_midi);
  tx->add_option("-o,--out", tx_out);

  std::string ev_est, ev_ref, ev_grid;
  double ev_tol = kDefaultOnsetTolerance;
  auto* ev = app.add_subcommand("evaluate", "octave-invariant note F1");
  ev->add_option("estimate", ev_est)->required();
  ev->add_option("reference", ev_ref, "transcript JSON or annotated segment")->required();
  ev->add_option("--beatgrid", ev_grid);
  ev->add_option("--tolerance", ev_tol);

  std::string ls_in, ls_grid, ls_mck, ls_cck, ls_meter = "4/4", ls_ly = "leadsheet.ly", ls_midi;
  auto* ls = app.add_subcommand("leadsheet", "melody + chords -> LilyPond and MIDI");
  ls->add_option("input", ls_in, "WAV or SSFT")->required();
  ls->add_option("beatgrid", ls_grid)->required();
  ls->add_option("--melody-ckpt", ls_mck)->required();
  ls->add_option("--chord-ckpt", ls_cck);
  ls->add_option("--meter", ls_meter);
  ls->add_option("--start", at.start_s);
  ls->add_option("--beats", beats);
  ls->add_option("--ly", ls_ly);
  ls->add_option("--midi", ls_midi);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  at.beats = beats;

  try {
    if (*convert) dataset_convert(conv_in, conv_out, jobs);
    else if (*split) dataset_split(split_dir, split_seed, ratios);
    else if (*synth) dataset_synth(synth_out, synth_count, synth_seed);
    else if (*refine) align_refine(al_seg, al_grid, al_out);
    else if (*mel) features_mel(fm_wav, fm_out);
    else if (*res) features_resample(fr_in, fr_align, fr_out);
    else if (*train_sc) train_cmd(tr_config, tr_seed, tr_steps, tr_lr, tr_ck);
    else if (*tx) transcribe_cmd(tx_in, tx_grid, tx_ck, at, tx_midi, tx_out);
    else if (*ev) evaluate_cmd(ev_est, ev_ref, ev_grid, ev_tol);
    else if (*ls) leadsheet_cmd(ls_in, ls_grid, ls_mck, ls_cck, ls_meter, at, ls_ly, ls_midi);
  } catch (const MissingInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
