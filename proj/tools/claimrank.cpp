// claimrank: check-worthiness ranking over debate transcripts with aligned
// audio. Subcommands cover the full pipeline: fixture generation, ingestion,
// sampling variants, denoising, segmentation, feature extraction, training,
// teacher-student alignment, fusion, prediction, evaluation and reporting.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "claimrank/claimrank.hpp"

using namespace claimrank;

namespace {

// ---------------------------------------------------------------------------
// Provenance: every subcommand appends one line to <out_dir>/run.log with a
// config hash, the seed and input-file hashes, so any artifact's inputs can
// be reconstructed.

std::string file_hash(const std::string& path) {
  try {
    return hex64(fnv1a64(read_file(path)));
  } catch (const IoError&) {
    return "missing";
  }
}

std::string log_timestamp() {
  if (const char* fixed = std::getenv("CLAIMRANK_TIMESTAMP")) return fixed;
  const auto now = std::chrono::system_clock::now();
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(
                           now.time_since_epoch())
                           .count();
  return std::to_string(seconds);
}

void write_provenance(const std::string& out_dir, const std::string& command,
                      const cfg::Config& effective, std::uint64_t seed,
                      const std::vector<std::string>& inputs) {
  if (out_dir.empty()) return;
  ensure_dir(out_dir);
  std::string line = "ts=" + log_timestamp() + "\tcmd=" + command +
                     "\tconfig=" + effective.hash() + "\tseed=" +
                     std::to_string(seed) + "\tinputs=";
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (i) line += ",";
    line += inputs[i] + ":" + file_hash(inputs[i]);
  }
  line += "\n";
  const std::string path = out_dir + "/run.log";
  std::string existing;
  try {
    existing = read_file(path);
  } catch (const IoError&) {
  }
  write_file(path, existing + line);
}

cfg::Config snapshot_flags(const CLI::App* cmd) {
  cfg::Config snap;
  for (const auto* opt : cmd->get_options()) {
    if (opt->get_name().empty() || opt->count() == 0) continue;
    std::string joined;
    for (const auto& r : opt->results()) {
      if (!joined.empty()) joined += ",";
      joined += r;
    }
    snap.set(opt->get_name(), joined);
  }
  return snap;
}

std::vector<int> parse_hidden(const std::string& spec) {
  std::vector<int> dims;
  std::size_t start = 0;
  while (start <= spec.size() && !spec.empty()) {
    std::size_t comma = spec.find(',', start);
    if (comma == std::string::npos) comma = spec.size();
    const std::string item = trim(spec.substr(start, comma - start));
    if (!item.empty())
      dims.push_back(static_cast<int>(parse_int(item, "hidden dims")));
    start = comma + 1;
  }
  return dims;
}

nn::MlpSpec make_mlp_spec(int input_dim, const std::string& hidden, double dropout,
                          int n_classes) {
  nn::MlpSpec spec;
  spec.input_dim = input_dim;
  spec.hidden_dims = parse_hidden(hidden);
  spec.rep_dim = spec.hidden_dims.empty() ? input_dim : spec.hidden_dims.back();
  spec.n_classes = n_classes;
  spec.dropout_p = dropout;
  return spec;
}

std::vector<features::FeatureKey> split_keys(const corpus::Corpus& c,
                                             corpus::Split s) {
  std::vector<features::FeatureKey> keys;
  for (const auto& u : corpus::split_utterances(c, s))
    keys.push_back({u.event_id, u.line_no});
  return keys;
}

void print_stats(const corpus::CorpusStats& stats) {
  auto row = [](const char* name, const corpus::SplitStats& s) {
    std::printf("%-8s %8zu %12zu %14zu %10.2f%%\n", name, s.n_events, s.n_sentences,
                s.n_checkworthy, 100.0 * s.fraction());
  };
  std::printf("%-8s %8s %12s %14s %11s\n", "split", "events", "sentences",
              "check-worthy", "fraction");
  row("train", stats.train);
  row("dev", stats.dev);
  row("test", stats.test);
  row("all", stats.all);
}

std::string stats_tsv(const corpus::CorpusStats& stats) {
  std::string out = "split\tn_events\tn_sentences\tn_checkworthy\tfraction\n";
  auto row = [&](const char* name, const corpus::SplitStats& s) {
    out += std::string(name) + "\t" + std::to_string(s.n_events) + "\t" +
           std::to_string(s.n_sentences) + "\t" + std::to_string(s.n_checkworthy) +
           "\t" + format_f6(s.fraction()) + "\n";
  };
  row("train", stats.train);
  row("dev", stats.dev);
  row("test", stats.test);
  row("all", stats.all);
  return out;
}

// ---------------------------------------------------------------------------
// Feature extraction shared by `features` and `pipeline`.

features::FeatureMatrix tfidf_features(const corpus::Corpus& corpus,
                                       const text::TfidfModel& model,
                                       corpus::Split split) {
  features::FeatureMatrix fm;
  for (const auto& u : corpus::split_utterances(corpus, split)) {
    const auto vec = text::transform_tfidf(model, text::tokenize(u.text));
    fm.push_row({u.event_id, u.line_no}, vec.to_dense(model.dim()));
  }
  return fm;
}

features::FeatureMatrix ne_features(const corpus::Corpus& corpus,
                                    const text::EntityTagger& tagger,
                                    corpus::Split split) {
  features::FeatureMatrix fm;
  for (const auto& u : corpus::split_utterances(corpus, split)) {
    const auto counts = text::ne_counts(u, tagger);
    std::vector<double> row(counts.begin(), counts.end());
    fm.push_row({u.event_id, u.line_no}, row);
  }
  return fm;
}

struct AudioFeatureOptions {
  double max_seconds = 8.0;
  bool denoise = false;
  audio::NoiseGateConfig gate;
  audio::MfccConfig mfcc;
  int target_rate = 16000;
};

// Pooled MFCC rows for every mapped segment of a split, ordered by
// (event_id, line_no). Extraction runs per segment in parallel.
features::FeatureMatrix mfcc_features(const corpus::Corpus& corpus,
                                      const std::vector<corpus::SegmentRef>& segments,
                                      const std::string& audio_root,
                                      corpus::Split split,
                                      const AudioFeatureOptions& opts) {
  std::vector<const corpus::SegmentRef*> wanted;
  for (const auto& ref : segments) {
    const auto* event = corpus.find_event(ref.event_id);
    if (event && event->split == split) wanted.push_back(&ref);
  }
  std::sort(wanted.begin(), wanted.end(),
            [](const corpus::SegmentRef* a, const corpus::SegmentRef* b) {
              if (a->event_id != b->event_id) return a->event_id < b->event_id;
              return a->line_no < b->line_no;
            });

  // Recordings are shared between segments; load each file once.
  std::map<std::string, audio::Waveform> recordings;
  for (const auto* ref : wanted) {
    const std::string path = audio_root + "/" + ref->audio_path;
    if (!recordings.count(path)) recordings[path] = audio::read_wav(path);
  }

  std::vector<std::vector<double>> rows(wanted.size());
  parallel_for(wanted.size(), [&](std::size_t i) {
    const auto& ref = *wanted[i];
    const auto& recording = recordings.at(audio_root + "/" + ref.audio_path);
    bool clamped = false;
    audio::Waveform segment =
        audio::cut_segment(recording, ref, opts.max_seconds, &clamped);
    if (clamped)
      std::fprintf(stderr, "warning: segment (%s, %lld) clamped to recording end\n",
                   ref.event_id.c_str(), static_cast<long long>(ref.line_no));
    segment = audio::resample(segment, opts.target_rate);
    if (opts.denoise && segment.samples.size() >= opts.gate.n_fft)
      segment = audio::spectral_gate_denoise(segment, opts.gate);
    rows[i] = audio::pool_features(audio::mfcc(segment, opts.mfcc));
  });

  features::FeatureMatrix fm;
  for (std::size_t i = 0; i < wanted.size(); ++i)
    fm.push_row({wanted[i]->event_id, wanted[i]->line_no}, rows[i]);
  return fm;
}

corpus::Corpus load_corpus_checked(const std::string& dir) {
  if (!std::filesystem::exists(dir + "/splits.tsv"))
    throw IoError("corpus directory " + dir + " has no splits.tsv");
  return corpus::load_corpus_dir(dir);
}

nn::DevSet devset_from(const corpus::Corpus& corpus, corpus::Split split,
                       const features::FeatureMatrix& feats) {
  return nn::build_devset(corpus, split, feats);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericError*>(&e)) return 3;
  if (dynamic_cast<const IoError*>(&e)) return 2;
  return 1;
}

// ---------------------------------------------------------------------------
// Pipeline: fixture -> ingest -> variant -> features -> train text + audio ->
// optional alignment -> fusion -> predict -> eval -> report, driven by one
// config file; every stage artifact lands under output_dir.

int run_pipeline(const cfg::Config& config, std::uint64_t seed_override,
                 bool seed_overridden) {
  const std::string corpus_dir = config.require("paths.corpus_dir");
  const std::string out_dir = config.require("paths.output_dir");
  const std::uint64_t seed =
      seed_overridden ? seed_override
                      : static_cast<std::uint64_t>(config.get_int("run.seed", 0));
  ensure_dir(out_dir);

  if (config.get_bool("fixture.generate", false)) {
    fixture::FixtureSpec fspec;
    fspec.n_events = static_cast<int>(config.get_int("fixture.events", 10));
    fspec.n_sentences_per_event =
        static_cast<int>(config.get_int("fixture.sentences", 30));
    fspec.positive_rate = config.get_double("fixture.positive_rate", 0.15);
    fspec.with_audio = config.get_bool("fixture.audio", true);
    fspec.segment_seconds = config.get_double("fixture.segment_seconds", 1.5);
    fspec.seed = seed;
    fixture::write_fixture_dir(fspec, corpus_dir);
  }

  const auto corpus = load_corpus_checked(corpus_dir);
  write_file(out_dir + "/stats.tsv", stats_tsv(corpus::compute_stats(corpus)));

  // Sampling variant for the training rows.
  const auto vspec =
      sampling::parse_variant(config.get("variant.kind", "original"), seed);
  const auto train_rows =
      sampling::make_variant(corpus::split_utterances(corpus, corpus::Split::train),
                             vspec);
  ensure_dir(out_dir + "/variants");
  sampling::write_variant(train_rows, out_dir + "/variants/train." +
                                          sampling::variant_suffix(vspec) + ".tsv");

  // Text features: TF.IDF fitted on the original train-split sentences.
  ensure_dir(out_dir + "/features");
  std::vector<std::vector<std::string>> train_docs;
  for (const auto& u : corpus::split_utterances(corpus, corpus::Split::train))
    train_docs.push_back(text::tokenize(u.text));
  const auto tfidf = text::fit_tfidf(train_docs);
  text::save_tfidf(tfidf, out_dir + "/features/tfidf.vocab.txt",
                   out_dir + "/features/tfidf.idf.csv");
  std::map<corpus::Split, features::FeatureMatrix> text_feats, audio_feats;
  for (const auto split :
       {corpus::Split::train, corpus::Split::dev, corpus::Split::test}) {
    text_feats[split] = tfidf_features(corpus, tfidf, split);
    features::write_feature_csv(text_feats[split],
                                out_dir + "/features/text_tfidf." +
                                    corpus::split_name(split) + ".csv");
  }

  // Audio features: pooled MFCC over the mapped segments.
  const std::string segment_map_path = corpus_dir + "/segments.tsv";
  if (!std::filesystem::exists(segment_map_path))
    throw IoError("pipeline needs a segment map at " + segment_map_path);
  const auto segments = corpus::load_segment_map(segment_map_path, corpus);
  AudioFeatureOptions audio_opts;
  audio_opts.denoise = config.get_bool("features.denoise", false);
  for (const auto split :
       {corpus::Split::train, corpus::Split::dev, corpus::Split::test}) {
    audio_feats[split] = mfcc_features(corpus, segments, corpus_dir, split, audio_opts);
    features::write_feature_csv(audio_feats[split],
                                out_dir + "/features/audio_mfcc." +
                                    corpus::split_name(split) + ".csv");
  }

  // Single-modality training.
  ensure_dir(out_dir + "/models");
  nn::TrainConfig tcfg;
  tcfg.learning_rate = config.get_double("train.learning_rate", 0.01);
  tcfg.epochs = static_cast<int>(config.get_int("train.epochs", 15));
  tcfg.warmup_proportion = config.get_double("train.warmup_proportion", 0.1);
  tcfg.weight_decay = config.get_double("train.weight_decay", 0.02);
  tcfg.batch_size = static_cast<int>(config.get_int("train.batch_size", 32));
  tcfg.lambda = config.get_double("train.lambda", 0.75);
  tcfg.seed = seed;

  auto [text_x, text_y] = features::gather_rows(text_feats[corpus::Split::train],
                                                train_rows);
  const auto text_result = nn::train_classifier(
      text_x, text_y, devset_from(corpus, corpus::Split::dev,
                                  text_feats[corpus::Split::dev]),
      make_mlp_spec(static_cast<int>(text_feats[corpus::Split::train].dim()),
                    config.get("model.text_hidden", "32,16"),
                    config.get_double("model.dropout", 0.1), 2),
      tcfg, nn::LossKind::cross_entropy, "text");
  nn::save_checkpoint(text_result.checkpoint, out_dir + "/models/text.ckpt");

  auto [audio_x, audio_y] = features::gather_rows(audio_feats[corpus::Split::train],
                                                  train_rows);
  const auto audio_result = nn::train_classifier(
      audio_x, audio_y, devset_from(corpus, corpus::Split::dev,
                                    audio_feats[corpus::Split::dev]),
      make_mlp_spec(static_cast<int>(audio_feats[corpus::Split::train].dim()),
                    config.get("model.audio_hidden", "32,16"),
                    config.get_double("model.dropout", 0.1), 2),
      tcfg, nn::LossKind::cross_entropy, "audio");
  nn::save_checkpoint(audio_result.checkpoint, out_dir + "/models/audio.ckpt");

  struct Run {
    std::string name;
    std::vector<eval::Prediction> predictions;
  };
  std::vector<Run> runs;
  auto test_predictions = [&](const nn::Mlp<float>& model,
                              const features::FeatureMatrix& feats) {
    return nn::predict_classifier(model, feats);
  };
  runs.push_back({"text", test_predictions(text_result.best_model,
                                           text_feats[corpus::Split::test])});
  runs.push_back({"audio", test_predictions(audio_result.best_model,
                                            audio_feats[corpus::Split::test])});

  // Optional knowledge alignment.
  if (config.get_bool("align.enabled", false)) {
    align::TeacherBundle teacher{text_result.best_model,
                                 nn::mlp_fingerprint(text_result.best_model)};
    const auto reps_train = align::extract_teacher_reps(
        teacher, text_feats[corpus::Split::train]);
    const auto reps_dev =
        align::extract_teacher_reps(teacher, text_feats[corpus::Split::dev]);
    auto [reps_x, reps_unused] = features::gather_rows(reps_train, train_rows);
    align::AlignedDevSet adev;
    adev.dev = devset_from(corpus, corpus::Split::dev, audio_feats[corpus::Split::dev]);
    adev.teacher_reps = reps_dev.values.cast<float>();

    nn::MlpSpec student_spec = make_mlp_spec(
        static_cast<int>(audio_feats[corpus::Split::train].dim()),
        config.get("align.hidden", config.get("model.text_hidden", "32,16")),
        config.get_double("model.dropout", 0.1), 2);
    student_spec.rep_dim = teacher.rep_dim();
    if (!student_spec.hidden_dims.empty())
      student_spec.hidden_dims.back() = teacher.rep_dim();
    nn::TrainConfig acfg = tcfg;
    acfg.lambda = config.get_double("align.lambda", 0.75);
    const auto aligned = align::train_aligned_student(
        audio_x, audio_y, reps_x, teacher, adev, student_spec, acfg);
    nn::save_checkpoint(aligned.checkpoint, out_dir + "/models/aligned.ckpt");
    runs.push_back({"aligned",
                    test_predictions(aligned.best_model,
                                     audio_feats[corpus::Split::test])});
  }

  // Fusion over the frozen single-modality models.
  const std::string mode_name = config.get("fusion.mode", "late");
  {
    fusion::FusionSpec fspec;
    fspec.mode = fusion::parse_mode(mode_name);
    const auto preset = fusion::fusion_preset(config.get(
        "fusion.preset", fspec.mode == fusion::FusionMode::late ? "late-small"
                                                                : "early-large"));
    fspec.projection_dim =
        static_cast<int>(config.get_int("fusion.projection_dim", 0));
    const int text_rep = text_result.checkpoint.spec.rep_dim;
    const int audio_rep = audio_result.checkpoint.spec.rep_dim;
    const int fused_dim =
        fspec.mode == fusion::FusionMode::late
            ? 2
            : (fspec.projection_dim > 0 ? 2 * fspec.projection_dim
                                        : text_rep + audio_rep);
    fspec.head.input_dim = fused_dim;
    fspec.head.hidden_dims = preset.hidden;
    fspec.head.rep_dim = preset.hidden.back();
    fspec.head.dropout_p = preset.dropout;
    fspec.config = tcfg;
    fspec.config.learning_rate = preset.learning_rate;

    std::vector<features::FeatureKey> train_keys;
    for (const auto& u : train_rows) train_keys.push_back({u.event_id, u.line_no});
    const auto dev_keys = split_keys(corpus, corpus::Split::dev);
    const auto test_keys = split_keys(corpus, corpus::Split::test);
    auto build = [&](const std::vector<features::FeatureKey>& keys,
                     corpus::Split feat_split) {
      return fspec.mode == fusion::FusionMode::late
                 ? fusion::build_late_inputs(text_result.best_model,
                                             audio_result.best_model, keys,
                                             text_feats[feat_split],
                                             audio_feats[feat_split])
                 : fusion::build_early_inputs(text_result.best_model,
                                              audio_result.best_model, keys,
                                              text_feats[feat_split],
                                              audio_feats[feat_split]);
    };
    const auto fused_train = build(train_keys, corpus::Split::train);
    const auto fused_dev = build(dev_keys, corpus::Split::dev);
    const auto fused_test = build(test_keys, corpus::Split::test);
    nn::DevSet fdev;
    fdev.x = fused_dev;
    for (const auto& k : dev_keys) {
      fdev.labels.push_back(corpus.find_utterance(k.event_id, k.line_no)->label);
      fdev.event_ids.push_back(k.event_id);
      fdev.line_nos.push_back(k.line_no);
    }
    const auto fused = fusion::train_fusion_head(fused_train, text_y, fdev, fspec,
                                                 text_rep, audio_rep);
    nn::save_checkpoint(fused.checkpoint, out_dir + "/models/fusion.ckpt");
    runs.push_back({"fusion-" + mode_name,
                    fusion::predict_fused(fused.best_head, fused_test, test_keys)});
  }

  // Predictions, per-run evaluation, comparison report.
  ensure_dir(out_dir + "/predictions");
  ensure_dir(out_dir + "/reports");
  std::vector<eval::EvalReport> reports;
  for (const auto& run : runs) {
    eval::write_predictions(run.predictions,
                            out_dir + "/predictions/" + run.name + ".test.tsv");
    auto report = eval::map_over_events(run.predictions, corpus, corpus::Split::test);
    report.run_id = run.name;
    report.seed = seed;
    eval::write_report(report, out_dir + "/reports/" + run.name + ".test.txt");
    std::printf("%-14s test MAP %.4f\n", run.name.c_str(), report.map);
    reports.push_back(std::move(report));
  }
  write_file(out_dir + "/reports/comparison.tsv", eval::compare_runs(reports));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"check-worthiness ranking pipeline"};
  app.require_subcommand(1);

  // --- fixture ------------------------------------------------------------
  auto* cmd_fixture = app.add_subcommand("fixture", "generate a synthetic corpus");
  std::string fx_out;
  fixture::FixtureSpec fx_spec;
  cmd_fixture->add_option("--out", fx_out, "corpus directory to create")->required();
  cmd_fixture->add_option("--events", fx_spec.n_events, "number of events")
      ->default_val(10);
  cmd_fixture->add_option("--sentences", fx_spec.n_sentences_per_event,
                          "sentences per event")
      ->default_val(30);
  cmd_fixture->add_option("--positive-rate", fx_spec.positive_rate,
                          "check-worthy fraction")
      ->default_val(0.15);
  cmd_fixture->add_option("--seed", fx_spec.seed, "generator seed")->default_val(0);
  cmd_fixture->add_flag("--audio", fx_spec.with_audio, "synthesize audio segments");
  cmd_fixture->add_option("--sample-rate", fx_spec.sample_rate, "audio sample rate")
      ->default_val(16000);
  cmd_fixture->add_option("--segment-seconds", fx_spec.segment_seconds,
                          "seconds per segment")
      ->default_val(1.5);

  // --- ingest / stats -------------------------------------------------------
  auto* cmd_ingest = app.add_subcommand("ingest", "validate a corpus directory");
  std::string in_corpus, in_out;
  cmd_ingest->add_option("--corpus", in_corpus, "corpus directory")->required();
  cmd_ingest->add_option("--out", in_out, "directory for stats.tsv and run log");

  auto* cmd_stats = app.add_subcommand("stats", "print per-split statistics");
  std::string st_corpus, st_speaker;
  cmd_stats->add_option("--corpus", st_corpus, "corpus directory")->required();
  cmd_stats->add_option("--speaker", st_speaker, "restrict to one speaker");

  // --- variant ---------------------------------------------------------------
  auto* cmd_variant = app.add_subcommand("variant", "build a training-set variant");
  std::string va_corpus, va_kind = "original", va_out;
  std::uint64_t va_seed = 0;
  cmd_variant->add_option("--corpus", va_corpus, "corpus directory")->required();
  cmd_variant->add_option("--kind", va_kind, "original|x<k>|1to1")
      ->default_val("original");
  cmd_variant->add_option("--seed", va_seed, "sampling seed")->default_val(0);
  cmd_variant->add_option("--out", va_out, "output directory")->required();

  // --- filter-speaker ---------------------------------------------------------
  auto* cmd_filter = app.add_subcommand("filter-speaker",
                                        "keep one speaker's utterances");
  std::string fs_corpus, fs_speaker, fs_out;
  cmd_filter->add_option("--corpus", fs_corpus, "corpus directory")->required();
  cmd_filter->add_option("--speaker", fs_speaker, "speaker name")->required();
  cmd_filter->add_option("--out", fs_out, "filtered corpus directory")->required();

  // --- denoise ----------------------------------------------------------------
  auto* cmd_denoise = app.add_subcommand("denoise",
                                         "spectral-gating noise reduction");
  std::string dn_corpus;
  std::vector<std::string> dn_wavs;
  audio::NoiseGateConfig dn_gate;
  cmd_denoise->add_option("--corpus", dn_corpus,
                          "corpus directory (denoise mapped segments)");
  cmd_denoise->add_option("--wav", dn_wavs, "individual wav files");
  cmd_denoise->add_option("--n-fft", dn_gate.n_fft, "analysis window")
      ->default_val(1024);
  cmd_denoise->add_option("--hop", dn_gate.hop, "hop length")->default_val(256);
  cmd_denoise->add_option("--n-std", dn_gate.n_std_thresh,
                          "threshold in noise standard deviations")
      ->default_val(1.5);
  cmd_denoise->add_option("--prop-decrease", dn_gate.prop_decrease,
                          "attenuation proportion")
      ->default_val(1.0);
  cmd_denoise->add_option("--freq-smooth", dn_gate.freq_smooth_bins,
                          "mask smoothing radius over frequency bins")
      ->default_val(2);
  cmd_denoise->add_option("--time-smooth", dn_gate.time_smooth_frames,
                          "mask smoothing radius over frames")
      ->default_val(4);

  // --- segment -----------------------------------------------------------------
  auto* cmd_segment = app.add_subcommand("segment", "cut mapped segments to files");
  std::string sg_corpus, sg_out;
  double sg_max_seconds = 8.0;
  cmd_segment->add_option("--corpus", sg_corpus, "corpus directory")->required();
  cmd_segment->add_option("--out", sg_out, "directory for segment wavs")->required();
  cmd_segment->add_option("--max-seconds", sg_max_seconds, "truncation cap")
      ->default_val(8.0);

  // --- features ------------------------------------------------------------------
  auto* cmd_features = app.add_subcommand("features", "extract feature CSVs");
  std::string ft_corpus, ft_out, ft_text = "tfidf", ft_audio = "mfcc", ft_sidecar;
  bool ft_denoise = false;
  double ft_max_seconds = 8.0;
  cmd_features->add_option("--corpus", ft_corpus, "corpus directory")->required();
  cmd_features->add_option("--out", ft_out, "output directory")->required();
  cmd_features->add_option("--text", ft_text, "tfidf|ne|none")->default_val("tfidf");
  cmd_features->add_option("--audio", ft_audio, "mfcc|none")->default_val("mfcc");
  cmd_features->add_option("--sidecar", ft_sidecar,
                           "entity sidecar TSV (ne mode; heuristics otherwise)");
  cmd_features->add_flag("--denoise", ft_denoise, "gate segments before MFCC");
  cmd_features->add_option("--max-seconds", ft_max_seconds, "segment truncation cap")
      ->default_val(8.0);

  // --- train -----------------------------------------------------------------------
  auto* cmd_train = app.add_subcommand("train", "train a single-modality classifier");
  std::string tr_corpus, tr_train_feat, tr_dev_feat, tr_variant, tr_out;
  std::string tr_model = "ffn", tr_hidden = "32,16", tr_modality = "text";
  double tr_dropout = 0.0;
  nn::TrainConfig tr_cfg;
  cmd_train->add_option("--corpus", tr_corpus, "corpus directory")->required();
  cmd_train->add_option("--train-features", tr_train_feat, "train-split feature CSV")
      ->required();
  cmd_train->add_option("--dev-features", tr_dev_feat, "dev-split feature CSV")
      ->required();
  cmd_train->add_option("--variant", tr_variant,
                        "variant TSV of training rows (default: original train)");
  cmd_train->add_option("--model", tr_model, "ffn|linear (linear trains with hinge)")
      ->default_val("ffn");
  cmd_train->add_option("--hidden", tr_hidden, "hidden widths, comma separated")
      ->default_val("32,16");
  cmd_train->add_option("--dropout", tr_dropout, "dropout after hidden layers")
      ->default_val(0.0);
  cmd_train->add_option("--modality", tr_modality, "text|audio")->default_val("text");
  cmd_train->add_option("--lr", tr_cfg.learning_rate, "peak learning rate")
      ->default_val(0.001);
  cmd_train->add_option("--epochs", tr_cfg.epochs, "training epochs")->default_val(15);
  cmd_train->add_option("--warmup", tr_cfg.warmup_proportion, "warmup proportion")
      ->default_val(0.1);
  cmd_train->add_option("--weight-decay", tr_cfg.weight_decay, "decoupled decay")
      ->default_val(0.02);
  cmd_train->add_option("--batch-size", tr_cfg.batch_size, "batch size")
      ->default_val(32);
  cmd_train->add_option("--seed", tr_cfg.seed, "training seed")->default_val(0);
  cmd_train->add_option("--out", tr_out, "checkpoint path")->required();

  // --- align ------------------------------------------------------------------------
  auto* cmd_align = app.add_subcommand(
      "align", "train an audio student against a frozen text teacher");
  std::string al_corpus, al_teacher, al_train_audio, al_dev_audio, al_train_text,
      al_dev_text, al_variant, al_out, al_hidden = "32,16";
  double al_dropout = 0.0;
  nn::TrainConfig al_cfg;
  cmd_align->add_option("--corpus", al_corpus, "corpus directory")->required();
  cmd_align->add_option("--teacher", al_teacher, "teacher checkpoint")->required();
  cmd_align->add_option("--train-audio-features", al_train_audio, "")->required();
  cmd_align->add_option("--dev-audio-features", al_dev_audio, "")->required();
  cmd_align->add_option("--train-text-features", al_train_text, "")->required();
  cmd_align->add_option("--dev-text-features", al_dev_text, "")->required();
  cmd_align->add_option("--variant", al_variant, "variant TSV of training rows");
  cmd_align->add_option("--hidden", al_hidden, "student hidden widths")
      ->default_val("32,16");
  cmd_align->add_option("--dropout", al_dropout, "student dropout")->default_val(0.0);
  cmd_align->add_option("--lambda", al_cfg.lambda, "alignment-loss weight")
      ->default_val(0.75);
  cmd_align->add_option("--lr", al_cfg.learning_rate, "peak learning rate")
      ->default_val(0.001);
  cmd_align->add_option("--epochs", al_cfg.epochs, "training epochs")->default_val(15);
  cmd_align->add_option("--warmup", al_cfg.warmup_proportion, "warmup proportion")
      ->default_val(0.1);
  cmd_align->add_option("--weight-decay", al_cfg.weight_decay, "decoupled decay")
      ->default_val(0.02);
  cmd_align->add_option("--batch-size", al_cfg.batch_size, "batch size")
      ->default_val(32);
  cmd_align->add_option("--seed", al_cfg.seed, "training seed")->default_val(0);
  cmd_align->add_option("--out", al_out, "student checkpoint path")->required();

  // --- fuse --------------------------------------------------------------------------
  auto* cmd_fuse = app.add_subcommand("fuse", "train a fusion head");
  std::string fu_corpus, fu_text_ckpt, fu_audio_ckpt, fu_out, fu_mode = "late";
  std::string fu_train_text, fu_dev_text, fu_train_audio, fu_dev_audio;
  std::string fu_preset, fu_variant, fu_hidden;
  int fu_projection = 0;
  double fu_dropout = 0.0;
  nn::TrainConfig fu_cfg;
  cmd_fuse->add_option("--corpus", fu_corpus, "corpus directory")->required();
  cmd_fuse->add_option("--mode", fu_mode, "early|late")->default_val("late");
  cmd_fuse->add_option("--text-ckpt", fu_text_ckpt, "frozen text checkpoint")
      ->required();
  cmd_fuse->add_option("--audio-ckpt", fu_audio_ckpt, "frozen audio checkpoint")
      ->required();
  cmd_fuse->add_option("--train-text-features", fu_train_text, "")->required();
  cmd_fuse->add_option("--dev-text-features", fu_dev_text, "")->required();
  cmd_fuse->add_option("--train-audio-features", fu_train_audio, "")->required();
  cmd_fuse->add_option("--dev-audio-features", fu_dev_audio, "")->required();
  cmd_fuse->add_option("--variant", fu_variant, "variant TSV of training rows");
  cmd_fuse->add_option("--preset", fu_preset,
                       "early-large|late-small|early-xlarge");
  cmd_fuse->add_option("--hidden", fu_hidden, "head hidden widths (overrides preset)");
  cmd_fuse->add_option("--dropout", fu_dropout, "head dropout")->default_val(0.0);
  cmd_fuse->add_option("--projection-dim", fu_projection,
                       "per-modality projection width (early mode)")
      ->default_val(0);
  cmd_fuse->add_option("--lr", fu_cfg.learning_rate, "peak learning rate")
      ->default_val(0.001);
  cmd_fuse->add_option("--epochs", fu_cfg.epochs, "training epochs")->default_val(15);
  cmd_fuse->add_option("--warmup", fu_cfg.warmup_proportion, "warmup proportion")
      ->default_val(0.1);
  cmd_fuse->add_option("--weight-decay", fu_cfg.weight_decay, "decoupled decay")
      ->default_val(0.02);
  cmd_fuse->add_option("--batch-size", fu_cfg.batch_size, "batch size")
      ->default_val(32);
  cmd_fuse->add_option("--seed", fu_cfg.seed, "training seed")->default_val(0);
  cmd_fuse->add_option("--out", fu_out, "fusion checkpoint path")->required();

  // --- predict ------------------------------------------------------------------------
  auto* cmd_predict = app.add_subcommand("predict", "score a split");
  std::string pr_corpus, pr_ckpt, pr_split = "test", pr_features;
  std::string pr_text_features, pr_audio_features, pr_text_ckpt, pr_audio_ckpt,
      pr_out;
  cmd_predict->add_option("--corpus", pr_corpus, "corpus directory")->required();
  cmd_predict->add_option("--checkpoint", pr_ckpt, "model checkpoint")->required();
  cmd_predict->add_option("--split", pr_split, "train|dev|test")->default_val("test");
  cmd_predict->add_option("--features", pr_features,
                          "feature CSV (single-modality checkpoints)");
  cmd_predict->add_option("--text-features", pr_text_features,
                          "text feature CSV (fusion checkpoints)");
  cmd_predict->add_option("--audio-features", pr_audio_features,
                          "audio feature CSV (fusion checkpoints)");
  cmd_predict->add_option("--text-ckpt", pr_text_ckpt, "base text checkpoint");
  cmd_predict->add_option("--audio-ckpt", pr_audio_ckpt, "base audio checkpoint");
  cmd_predict->add_option("--out", pr_out, "predictions TSV path")->required();

  // --- eval ----------------------------------------------------------------------------
  auto* cmd_eval = app.add_subcommand("eval", "evaluate predictions with MAP");
  std::string ev_corpus, ev_preds, ev_split = "test", ev_out, ev_run_id;
  cmd_eval->add_option("--corpus", ev_corpus, "corpus directory")->required();
  cmd_eval->add_option("--predictions", ev_preds, "predictions TSV")->required();
  cmd_eval->add_option("--split", ev_split, "train|dev|test")->default_val("test");
  cmd_eval->add_option("--run-id", ev_run_id, "run identifier for the report");
  cmd_eval->add_option("--out", ev_out, "report path");

  // --- report ---------------------------------------------------------------------------
  auto* cmd_report = app.add_subcommand("report", "compare evaluation reports");
  std::vector<std::string> rp_inputs;
  std::string rp_out;
  cmd_report->add_option("reports", rp_inputs, "report files")->required();
  cmd_report->add_option("--out", rp_out, "comparison table path");

  // --- gradcheck -------------------------------------------------------------------------
  auto* cmd_gradcheck = app.add_subcommand(
      "gradcheck", "verify gradients against finite differences");
  std::uint64_t gc_seed = 101;
  double gc_tolerance = 1e-4;
  cmd_gradcheck->add_option("--seed", gc_seed, "probe seed")->default_val(101);
  cmd_gradcheck->add_option("--tolerance", gc_tolerance, "max relative error")
      ->default_val(1e-4);

  // --- pipeline ---------------------------------------------------------------------------
  auto* cmd_pipeline = app.add_subcommand(
      "pipeline", "run ingest, variant, features, training and evaluation");
  std::string pl_config;
  std::uint64_t pl_seed = 0;
  cmd_pipeline->add_option("--config", pl_config, "pipeline config file")->required();
  auto* pl_seed_opt =
      cmd_pipeline->add_option("--seed", pl_seed, "override [run] seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_fixture->parsed()) {
      fixture::write_fixture_dir(fx_spec, fx_out);
      const auto stats =
          corpus::compute_stats(fixture::generate_fixture(fx_spec).corpus);
      print_stats(stats);
      write_provenance(fx_out, "fixture", snapshot_flags(cmd_fixture), fx_spec.seed,
                       {});
      return 0;
    }

    if (cmd_ingest->parsed()) {
      const auto corpus = load_corpus_checked(in_corpus);
      const std::string seg_path = in_corpus + "/segments.tsv";
      std::size_t n_segments = 0;
      if (std::filesystem::exists(seg_path))
        n_segments = corpus::load_segment_map(seg_path, corpus).size();
      const auto stats = corpus::compute_stats(corpus);
      print_stats(stats);
      std::printf("segments: %zu\n", n_segments);
      if (!in_out.empty()) {
        ensure_dir(in_out);
        write_file(in_out + "/stats.tsv", stats_tsv(stats));
        write_provenance(in_out, "ingest", snapshot_flags(cmd_ingest), 0,
                         {in_corpus + "/splits.tsv"});
      }
      return 0;
    }

    if (cmd_stats->parsed()) {
      auto corpus = load_corpus_checked(st_corpus);
      if (!st_speaker.empty()) corpus = corpus::filter_speaker(corpus, st_speaker);
      print_stats(corpus::compute_stats(corpus));
      return 0;
    }

    if (cmd_variant->parsed()) {
      const auto corpus = load_corpus_checked(va_corpus);
      const auto spec = sampling::parse_variant(va_kind, va_seed);
      const auto rows = sampling::make_variant(
          corpus::split_utterances(corpus, corpus::Split::train), spec);
      ensure_dir(va_out);
      const std::string path =
          va_out + "/train." + sampling::variant_suffix(spec) + ".tsv";
      sampling::write_variant(rows, path);
      std::size_t positives = 0;
      for (const auto& u : rows) positives += static_cast<std::size_t>(u.label);
      std::printf("%s: %zu rows, %zu check-worthy (%.1f%%)\n", path.c_str(),
                  rows.size(), positives, 100.0 * positives / rows.size());
      write_provenance(va_out, "variant", snapshot_flags(cmd_variant), va_seed,
                       {va_corpus + "/splits.tsv"});
      return 0;
    }

    if (cmd_filter->parsed()) {
      const auto corpus = load_corpus_checked(fs_corpus);
      const auto filtered = corpus::filter_speaker(corpus, fs_speaker);
      ensure_dir(fs_out);
      ensure_dir(fs_out + "/events");
      corpus::write_split_manifest(filtered, fs_out + "/splits.tsv");
      for (const auto& event : filtered.events)
        corpus::write_transcript(event, fs_out + "/events/" + event.event_id + ".tsv");
      print_stats(corpus::compute_stats(filtered));
      write_provenance(fs_out, "filter-speaker", snapshot_flags(cmd_filter), 0,
                       {fs_corpus + "/splits.tsv"});
      return 0;
    }

    if (cmd_denoise->parsed()) {
      dn_gate.validate();
      std::vector<std::string> outputs;
      if (!dn_corpus.empty()) {
        const auto corpus = load_corpus_checked(dn_corpus);
        const auto segments =
            corpus::load_segment_map(dn_corpus + "/segments.tsv", corpus);
        // Group segments per recording, denoise each span with its own
        // statistics, and write the rebuilt recording alongside the original.
        std::map<std::string, std::vector<const corpus::SegmentRef*>> by_file;
        for (const auto& ref : segments) by_file[ref.audio_path].push_back(&ref);
        for (const auto& [rel_path, refs] : by_file) {
          const std::string path = dn_corpus + "/" + rel_path;
          audio::Waveform recording = audio::read_wav(path);
          audio::Waveform rebuilt = recording;
          for (const auto* ref : refs) {
            bool clamped = false;
            const auto segment = audio::cut_segment(
                recording, *ref, 1e9, &clamped);  // full span, no cap here
            if (segment.samples.size() < dn_gate.n_fft) continue;
            const auto gated = audio::spectral_gate_denoise(segment, dn_gate);
            const auto start =
                static_cast<std::size_t>(ref->start_ms * recording.sample_rate / 1000);
            for (std::size_t i = 0; i < gated.samples.size(); ++i)
              rebuilt.samples[start + i] = gated.samples[i];
          }
          const std::string out_path =
              path.substr(0, path.size() - 4) + ".denoised.wav";
          audio::write_wav(rebuilt, out_path);
          outputs.push_back(out_path);
        }
      }
      for (const auto& wav : dn_wavs) {
        const auto recording = audio::read_wav(wav);
        const auto gated = audio::spectral_gate_denoise(recording, dn_gate);
        const std::string out_path = wav.substr(0, wav.size() - 4) + ".denoised.wav";
        audio::write_wav(gated, out_path);
        outputs.push_back(out_path);
      }
      for (const auto& path : outputs) std::printf("wrote %s\n", path.c_str());
      return 0;
    }

    if (cmd_segment->parsed()) {
      const auto corpus = load_corpus_checked(sg_corpus);
      const auto segments =
          corpus::load_segment_map(sg_corpus + "/segments.tsv", corpus);
      ensure_dir(sg_out);
      std::map<std::string, audio::Waveform> recordings;
      for (const auto& ref : segments) {
        const std::string path = sg_corpus + "/" + ref.audio_path;
        if (!recordings.count(path)) recordings[path] = audio::read_wav(path);
        bool clamped = false;
        const auto cut =
            audio::cut_segment(recordings.at(path), ref, sg_max_seconds, &clamped);
        if (clamped)
          std::fprintf(stderr, "warning: segment (%s, %lld) clamped\n",
                       ref.event_id.c_str(), static_cast<long long>(ref.line_no));
        audio::write_wav(cut, sg_out + "/" + ref.event_id + "_" +
                                  std::to_string(ref.line_no) + ".wav");
      }
      std::printf("wrote %zu segments to %s\n", segments.size(), sg_out.c_str());
      write_provenance(sg_out, "segment", snapshot_flags(cmd_segment), 0,
                       {sg_corpus + "/segments.tsv"});
      return 0;
    }

    if (cmd_features->parsed()) {
      const auto corpus = load_corpus_checked(ft_corpus);
      ensure_dir(ft_out);
      const auto splits = {corpus::Split::train, corpus::Split::dev,
                           corpus::Split::test};
      if (ft_text == "tfidf") {
        std::vector<std::vector<std::string>> docs;
        for (const auto& u : corpus::split_utterances(corpus, corpus::Split::train))
          docs.push_back(text::tokenize(u.text));
        const auto model = text::fit_tfidf(docs);
        text::save_tfidf(model, ft_out + "/tfidf.vocab.txt",
                         ft_out + "/tfidf.idf.csv");
        for (const auto split : splits)
          features::write_feature_csv(
              tfidf_features(corpus, model, split),
              ft_out + "/text_tfidf." + corpus::split_name(split) + ".csv");
      } else if (ft_text == "ne") {
        std::unique_ptr<text::EntityTagger> tagger;
        if (!ft_sidecar.empty())
          tagger = std::make_unique<text::SidecarTagger>(ft_sidecar);
        else
          tagger = std::make_unique<text::HeuristicTagger>();
        for (const auto split : splits)
          features::write_feature_csv(
              ne_features(corpus, *tagger, split),
              ft_out + "/text_ne." + corpus::split_name(split) + ".csv");
      } else if (ft_text != "none") {
        throw ConfigError("unknown text feature kind '" + ft_text + "'");
      }
      if (ft_audio == "mfcc") {
        const auto segments =
            corpus::load_segment_map(ft_corpus + "/segments.tsv", corpus);
        AudioFeatureOptions opts;
        opts.denoise = ft_denoise;
        opts.max_seconds = ft_max_seconds;
        for (const auto split : splits)
          features::write_feature_csv(
              mfcc_features(corpus, segments, ft_corpus, split, opts),
              ft_out + "/audio_mfcc." + corpus::split_name(split) + ".csv");
      } else if (ft_audio != "none") {
        throw ConfigError("unknown audio feature kind '" + ft_audio + "'");
      }
      write_provenance(ft_out, "features", snapshot_flags(cmd_features), 0,
                       {ft_corpus + "/splits.tsv"});
      return 0;
    }

    if (cmd_train->parsed()) {
      const auto corpus = load_corpus_checked(tr_corpus);
      const auto train_feats = features::load_feature_csv(tr_train_feat);
      const auto dev_feats = features::load_feature_csv(tr_dev_feat);
      const auto rows =
          tr_variant.empty()
              ? corpus::split_utterances(corpus, corpus::Split::train)
              : sampling::load_variant(tr_variant);
      auto [x, y] = features::gather_rows(train_feats, rows);
      const auto dev = devset_from(corpus, corpus::Split::dev, dev_feats);

      nn::LossKind loss = nn::LossKind::cross_entropy;
      nn::MlpSpec spec;
      if (tr_model == "linear") {
        loss = nn::LossKind::hinge;
        spec = make_mlp_spec(static_cast<int>(train_feats.dim()), "", 0.0, 1);
      } else if (tr_model == "ffn") {
        spec = make_mlp_spec(static_cast<int>(train_feats.dim()), tr_hidden,
                             tr_dropout, 2);
      } else {
        throw ConfigError("unknown model '" + tr_model + "' (ffn|linear)");
      }
      const auto result =
          nn::train_classifier(x, y, dev, spec, tr_cfg, loss, tr_modality);
      nn::save_checkpoint(result.checkpoint, tr_out);
      std::printf("best epoch %d, dev MAP %.4f -> %s\n", result.checkpoint.epoch + 1,
                  result.checkpoint.dev_map, tr_out.c_str());
      write_provenance(std::filesystem::path(tr_out).parent_path().string(), "train",
                       snapshot_flags(cmd_train), tr_cfg.seed,
                       {tr_train_feat, tr_dev_feat});
      return 0;
    }

    if (cmd_align->parsed()) {
      const auto corpus = load_corpus_checked(al_corpus);
      const auto teacher =
          align::teacher_from_checkpoint(nn::load_checkpoint(al_teacher));
      const auto train_audio = features::load_feature_csv(al_train_audio);
      const auto dev_audio = features::load_feature_csv(al_dev_audio);
      const auto train_text = features::load_feature_csv(al_train_text);
      const auto dev_text = features::load_feature_csv(al_dev_text);
      const auto rows =
          al_variant.empty()
              ? corpus::split_utterances(corpus, corpus::Split::train)
              : sampling::load_variant(al_variant);

      auto [x, y] = features::gather_rows(train_audio, rows);
      const auto reps_train_fm = align::extract_teacher_reps(teacher, train_text);
      auto [reps, reps_unused] = features::gather_rows(reps_train_fm, rows);
      align::AlignedDevSet adev;
      adev.dev = devset_from(corpus, corpus::Split::dev, dev_audio);
      adev.teacher_reps =
          align::extract_teacher_reps(teacher, dev_text).values.cast<float>();

      nn::MlpSpec spec = make_mlp_spec(static_cast<int>(train_audio.dim()), al_hidden,
                                       al_dropout, 2);
      spec.rep_dim = teacher.rep_dim();
      if (!spec.hidden_dims.empty()) spec.hidden_dims.back() = teacher.rep_dim();
      const auto outcome = align::train_aligned_student(x, y, reps, teacher, adev,
                                                        spec, al_cfg);
      nn::save_checkpoint(outcome.checkpoint, al_out);
      std::printf("best epoch %d, dev MAP %.4f, dev alignment MSE %.6f -> %s\n",
                  outcome.best_epoch + 1, outcome.best_dev_map,
                  outcome.dev_align_history.empty()
                      ? 0.0
                      : outcome.dev_align_history.back(),
                  al_out.c_str());
      write_provenance(std::filesystem::path(al_out).parent_path().string(), "align",
                       snapshot_flags(cmd_align), al_cfg.seed,
                       {al_teacher, al_train_audio, al_train_text});
      return 0;
    }

    if (cmd_fuse->parsed()) {
      const auto corpus = load_corpus_checked(fu_corpus);
      const auto text_ckpt = nn::load_checkpoint(fu_text_ckpt);
      const auto audio_ckpt = nn::load_checkpoint(fu_audio_ckpt);
      const auto text_model = nn::mlp_from_checkpoint(text_ckpt);
      const auto audio_model = nn::mlp_from_checkpoint(audio_ckpt);
      const auto train_text = features::load_feature_csv(fu_train_text);
      const auto dev_text = features::load_feature_csv(fu_dev_text);
      const auto train_audio = features::load_feature_csv(fu_train_audio);
      const auto dev_audio = features::load_feature_csv(fu_dev_audio);
      const auto rows =
          fu_variant.empty()
              ? corpus::split_utterances(corpus, corpus::Split::train)
              : sampling::load_variant(fu_variant);

      fusion::FusionSpec fspec;
      fspec.mode = fusion::parse_mode(fu_mode);
      fspec.projection_dim = fu_projection;
      fspec.config = fu_cfg;
      std::vector<int> hidden;
      double dropout = fu_dropout;
      if (!fu_preset.empty()) {
        const auto preset = fusion::fusion_preset(fu_preset);
        hidden = preset.hidden;
        dropout = preset.dropout;
        if (cmd_fuse->get_option("--lr")->count() == 0)
          fspec.config.learning_rate = preset.learning_rate;
      }
      if (!fu_hidden.empty()) hidden = parse_hidden(fu_hidden);
      if (hidden.empty()) hidden = {6, 6};

      const int text_rep = text_ckpt.spec.rep_dim;
      const int audio_rep = audio_ckpt.spec.rep_dim;
      fspec.head.input_dim =
          fspec.mode == fusion::FusionMode::late
              ? 2
              : (fu_projection > 0 ? 2 * fu_projection : text_rep + audio_rep);
      fspec.head.hidden_dims = hidden;
      fspec.head.rep_dim = hidden.back();
      fspec.head.dropout_p = dropout;

      std::vector<features::FeatureKey> train_keys;
      for (const auto& u : rows) train_keys.push_back({u.event_id, u.line_no});
      const auto dev_keys = split_keys(corpus, corpus::Split::dev);
      auto build = [&](const std::vector<features::FeatureKey>& keys,
                       const features::FeatureMatrix& tf,
                       const features::FeatureMatrix& af) {
        return fspec.mode == fusion::FusionMode::late
                   ? fusion::build_late_inputs(text_model, audio_model, keys, tf, af)
                   : fusion::build_early_inputs(text_model, audio_model, keys, tf, af);
      };
      const auto fused_train = build(train_keys, train_text, train_audio);
      const auto fused_dev = build(dev_keys, dev_text, dev_audio);
      std::vector<int> y;
      for (const auto& u : rows) y.push_back(u.label);
      nn::DevSet fdev;
      fdev.x = fused_dev;
      for (const auto& k : dev_keys) {
        fdev.labels.push_back(corpus.find_utterance(k.event_id, k.line_no)->label);
        fdev.event_ids.push_back(k.event_id);
        fdev.line_nos.push_back(k.line_no);
      }
      auto result = fusion::train_fusion_head(fused_train, y, fdev, fspec, text_rep,
                                              audio_rep);
      result.checkpoint.extra["text_checkpoint"] = fu_text_ckpt;
      result.checkpoint.extra["audio_checkpoint"] = fu_audio_ckpt;
      result.checkpoint.extra["text_fingerprint"] = nn::mlp_fingerprint(text_model);
      result.checkpoint.extra["audio_fingerprint"] = nn::mlp_fingerprint(audio_model);
      nn::save_checkpoint(result.checkpoint, fu_out);
      std::printf("best epoch %d, dev MAP %.4f -> %s\n", result.checkpoint.epoch + 1,
                  result.checkpoint.dev_map, fu_out.c_str());
      write_provenance(std::filesystem::path(fu_out).parent_path().string(), "fuse",
                       snapshot_flags(cmd_fuse), fu_cfg.seed,
                       {fu_text_ckpt, fu_audio_ckpt});
      return 0;
    }

    if (cmd_predict->parsed()) {
      const auto corpus = load_corpus_checked(pr_corpus);
      const auto split = corpus::parse_split(pr_split);
      const auto ckpt = nn::load_checkpoint(pr_ckpt);
      std::vector<eval::Prediction> predictions;
      if (ckpt.kind == "fusion") {
        if (pr_text_features.empty() || pr_audio_features.empty())
          throw ConfigError(
              "fusion checkpoints need --text-features and --audio-features");
        const auto head = fusion::fusion_from_checkpoint(ckpt);
        const auto resolve = [&](const std::string& override_path,
                                 const char* key) {
          if (!override_path.empty()) return override_path;
          const auto it = ckpt.extra.find(key);
          if (it == ckpt.extra.end())
            throw ConfigError("fusion checkpoint lacks " + std::string(key));
          return it->second;
        };
        const auto text_model = nn::mlp_from_checkpoint(
            nn::load_checkpoint(resolve(pr_text_ckpt, "text_checkpoint")));
        const auto audio_model = nn::mlp_from_checkpoint(
            nn::load_checkpoint(resolve(pr_audio_ckpt, "audio_checkpoint")));
        const auto tf = features::load_feature_csv(pr_text_features);
        const auto af = features::load_feature_csv(pr_audio_features);
        const auto keys = split_keys(corpus, split);
        const auto inputs =
            head.mode() == fusion::FusionMode::late
                ? fusion::build_late_inputs(text_model, audio_model, keys, tf, af)
                : fusion::build_early_inputs(text_model, audio_model, keys, tf, af);
        predictions = fusion::predict_fused(head, inputs, keys);
      } else {
        if (pr_features.empty())
          throw ConfigError("single-modality checkpoints need --features");
        const auto model = nn::mlp_from_checkpoint(ckpt);
        const auto feats = features::load_feature_csv(pr_features);
        // Restrict to the requested split, in split order.
        const auto keys = split_keys(corpus, split);
        features::FeatureMatrix selected;
        for (const auto& key : keys) {
          const std::size_t row = feats.row_for(key);
          std::vector<double> values(feats.dim());
          for (std::size_t c = 0; c < feats.dim(); ++c)
            values[c] = feats.values(row, c);
          selected.push_row(key, values);
        }
        predictions = nn::predict_classifier(model, selected, ckpt.loss);
      }
      eval::write_predictions(predictions, pr_out);
      std::printf("wrote %zu predictions to %s\n", predictions.size(), pr_out.c_str());
      write_provenance(std::filesystem::path(pr_out).parent_path().string(),
                       "predict", snapshot_flags(cmd_predict), ckpt.seed, {pr_ckpt});
      return 0;
    }

    if (cmd_eval->parsed()) {
      const auto corpus = load_corpus_checked(ev_corpus);
      const auto predictions = eval::load_predictions(ev_preds);
      auto report =
          eval::map_over_events(predictions, corpus, corpus::parse_split(ev_split));
      report.run_id = ev_run_id;
      report.checkpoint_id = ev_preds;
      std::printf("MAP %.6f over %zu events (%zu excluded)\n", report.map,
                  report.per_event.size(), report.excluded_events.size());
      if (!ev_out.empty()) {
        eval::write_report(report, ev_out);
        write_provenance(std::filesystem::path(ev_out).parent_path().string(),
                         "eval", snapshot_flags(cmd_eval), 0, {ev_preds});
      }
      return 0;
    }

    if (cmd_report->parsed()) {
      std::vector<eval::EvalReport> reports;
      for (const auto& path : rp_inputs) reports.push_back(eval::load_report(path));
      const auto table = eval::compare_runs(reports);
      std::fputs(table.c_str(), stdout);
      if (!rp_out.empty()) write_file(rp_out, table);
      return 0;
    }

    if (cmd_gradcheck->parsed()) {
      Rng rng(gc_seed);
      const std::vector<std::vector<int>> architectures = {{}, {6}, {8, 5}, {8, 6, 4}};
      double worst = 0.0;
      for (const auto& hidden : architectures) {
        for (const auto loss : {nn::LossKind::cross_entropy, nn::LossKind::mse,
                                nn::LossKind::hinge, nn::LossKind::composite}) {
          nn::MlpSpec spec;
          spec.input_dim = 5;
          spec.hidden_dims = hidden;
          spec.rep_dim = hidden.empty() ? 5 : hidden.back();
          spec.n_classes = loss == nn::LossKind::hinge ? 1 : 2;
          const auto model = nn::Mlp<double>::init(spec, rng.next_u64());
          Matrix<double> x(7, 5);
          for (auto& v : x.data) v = rng.normal();
          nn::GradcheckCase gc;
          gc.loss = loss;
          gc.labels.resize(7);
          for (auto& l : gc.labels) l = rng.bernoulli(0.5) ? 1 : 0;
          gc.target_rep = Matrix<double>(7, static_cast<std::size_t>(spec.rep_dim));
          for (auto& v : gc.target_rep.data) v = rng.normal();

          const std::vector<double> lambdas =
              loss == nn::LossKind::composite ? std::vector<double>{0.0, 0.25, 0.75,
                                                                    1.0}
                                              : std::vector<double>{0.75};
          for (const double lambda : lambdas) {
            gc.lambda = lambda;
            const double err = nn::gradcheck(model, gc, x);
            worst = std::max(worst, err);
            std::printf("layers=%zu loss=%d lambda=%.2f max_rel_err=%.3e\n",
                        hidden.size(), static_cast<int>(loss), lambda, err);
          }
        }
      }
      std::printf("worst max_rel_err=%.3e (tolerance %.1e)\n", worst, gc_tolerance);
      if (worst > gc_tolerance) {
        std::fprintf(stderr, "gradcheck failed tolerance\n");
        return 3;
      }
      return 0;
    }

    if (cmd_pipeline->parsed()) {
      cfg::Config config = cfg::Config::parse_file(pl_config);
      const int code = run_pipeline(config, pl_seed, pl_seed_opt->count() > 0);
      const std::string out_dir = config.get("paths.output_dir", "");
      write_provenance(out_dir, "pipeline", config,
                       pl_seed_opt->count() > 0
                           ? pl_seed
                           : static_cast<std::uint64_t>(config.get_int("run.seed", 0)),
                       {pl_config, config.get("paths.corpus_dir", "") + "/splits.tsv"});
      return code;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  }
  return 1;
}
