#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "claimrank/audio.hpp"
#include "claimrank/corpus.hpp"
#include "claimrank/features.hpp"
#include "claimrank/rng.hpp"

namespace claimrank::fixture {

// Synthetic corpus generation. Stands in for the non-redistributable debate
// data: deterministic transcripts with a controllable positive rate, and
// optional audio where each segment is a sine tone whose frequency encodes
// the label, plus seeded Gaussian noise.
struct FixtureSpec {
  int n_events = 2;
  int n_sentences_per_event = 10;
  double positive_rate = 0.2;
  std::uint64_t seed = 0;
  bool with_audio = false;
  int sample_rate = 16000;
  double segment_seconds = 1.5;

  void validate() const {
    if (n_events <= 0 || n_sentences_per_event <= 0)
      throw ConfigError("fixture: non-positive sizes");
    if (positive_rate < 0.0 || positive_rate > 1.0)
      throw ConfigError("fixture: positive_rate outside [0,1]");
    if (sample_rate <= 0 || segment_seconds <= 0.0)
      throw ConfigError("fixture: bad audio parameters");
  }
};

struct Fixture {
  corpus::Corpus corpus;
  std::vector<corpus::SegmentRef> segments;
  std::map<std::string, audio::Waveform> recordings;  // relative path -> audio
};

namespace detail {

inline const std::vector<std::string>& negative_templates() {
  static const std::vector<std::string> t = {
      "well i think we should focus on what matters to working families",
      "that is simply not what my opponent said on stage tonight",
      "people across this country are tired of the same old politics",
      "let me be clear about where i stand on this question",
      "we can disagree without being disagreeable about the future",
      "my record speaks for itself on these important issues",
      "the american people deserve honest answers from their leaders",
      "i want to thank the moderators for hosting this debate"};
  return t;
}

inline const std::vector<std::string>& positive_templates() {
  // '#' is replaced by a generated number; numeric claims give the text
  // baselines something to learn.
  static const std::vector<std::string> t = {
      "the new program costs # million dollars every single year",
      "unemployment fell by # percent during the last administration",
      "we lost # thousand manufacturing jobs to bad trade deals",
      "crime went up # percent in our largest cities last year",
      "the budget deficit grew to # billion dollars under their watch",
      "over # million families lost their health insurance coverage"};
  return t;
}

inline const std::vector<std::string>& speakers() {
  static const std::vector<std::string> s = {"SMITH", "JONES", "TAYLOR", "MILLER"};
  return s;
}

inline std::string render_sentence(Rng& rng, int label) {
  const auto& bank = label == 1 ? positive_templates() : negative_templates();
  std::string text = bank[static_cast<std::size_t>(rng.uniform_u64(bank.size()))];
  const std::size_t hash_pos = text.find('#');
  if (hash_pos != std::string::npos) {
    const double value = 1.0 + rng.uniform_real() * 98.0;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    text = text.substr(0, hash_pos) + buf + text.substr(hash_pos + 1);
  }
  return text;
}

}  // namespace detail

inline Fixture generate_fixture(const FixtureSpec& spec) {
  spec.validate();
  Fixture fx;
  Rng rng(derive_seed(spec.seed, "fixture"));
  const auto seg_ms = static_cast<long long>(std::llround(spec.segment_seconds * 1000.0));
  const auto seg_samples = static_cast<std::size_t>(
      std::llround(spec.segment_seconds * spec.sample_rate));

  for (int e = 0; e < spec.n_events; ++e) {
    corpus::Event event;
    event.event_id = "ev" + std::to_string(e + 1);
    // Splits cycle 3:1:1 so every fixture with >= 5 events covers them all.
    switch (e % 5) {
      case 3: event.split = corpus::Split::dev; break;
      case 4: event.split = corpus::Split::test; break;
      default: event.split = corpus::Split::train; break;
    }
    audio::Waveform recording;
    recording.sample_rate = spec.sample_rate;
    const std::string audio_path = "audio/" + event.event_id + ".wav";

    for (int s = 0; s < spec.n_sentences_per_event; ++s) {
      corpus::Utterance u;
      u.event_id = event.event_id;
      u.line_no = s + 1;
      u.speaker = detail::speakers()[static_cast<std::size_t>(
          rng.uniform_u64(detail::speakers().size()))];
      u.label = rng.bernoulli(spec.positive_rate) ? 1 : 0;
      u.text = detail::render_sentence(rng, u.label);
      event.utterances.push_back(u);

      if (spec.with_audio) {
        corpus::SegmentRef ref;
        ref.event_id = event.event_id;
        ref.line_no = u.line_no;
        ref.audio_path = audio_path;
        ref.start_ms = static_cast<long long>(s) * seg_ms;
        ref.end_ms = ref.start_ms + seg_ms;
        fx.segments.push_back(ref);

        // Label-dependent tone: 660 Hz for check-worthy, 220 Hz otherwise.
        const double freq = u.label == 1 ? 660.0 : 220.0;
        const double detune = rng.normal(0.0, 3.0);
        for (std::size_t i = 0; i < seg_samples; ++i) {
          const double t = static_cast<double>(i) / spec.sample_rate;
          double v = 0.25 * std::sin(2.0 * M_PI * (freq + detune) * t) +
                     rng.normal(0.0, 0.02);
          recording.samples.push_back(std::clamp(v, -1.0, 1.0));
        }
      }
    }
    if (spec.with_audio) fx.recordings[audio_path] = std::move(recording);
    fx.corpus.events.push_back(std::move(event));
  }
  return fx;
}

// Materializes a fixture as a corpus directory (splits.tsv, events/,
// segments.tsv, audio/).
inline void write_fixture_dir(const FixtureSpec& spec, const std::string& dir) {
  const Fixture fx = generate_fixture(spec);
  ensure_dir(dir);
  ensure_dir(dir + "/events");
  corpus::write_split_manifest(fx.corpus, dir + "/splits.tsv");
  for (const auto& event : fx.corpus.events)
    corpus::write_transcript(event, dir + "/events/" + event.event_id + ".tsv");
  if (spec.with_audio) {
    ensure_dir(dir + "/audio");
    corpus::write_segment_map(fx.segments, dir + "/segments.tsv");
    for (const auto& [path, wave] : fx.recordings)
      audio::write_wav(wave, dir + "/" + path);
  }
}

// ---------------------------------------------------------------------------
// Complementary-modality fixture for the alignment and fusion experiments:
// positives come in two kinds, A visible strongly in the text features and
// B visible strongly in the audio features, so neither modality alone
// resolves more than its half well. Each modality also carries a weak copy
// of the other kind's signal: the audio-side leak is what representation
// alignment can exploit, and the text-side leak keeps the teacher's
// representations from actively suppressing audio-only positives.
struct ComplementarySpec {
  int train_events = 8;
  int dev_events = 3;
  int test_events = 3;
  int sentences_per_event = 300;
  double positive_rate = 0.04;
  int text_dim = 12;
  int audio_dim = 12;
  double text_signal = 3.0;   // kind-A positives in text features
  double audio_signal = 2.5;  // kind-B positives in audio features
  double audio_cross = 1.8;   // kind-A leak into audio features
  double text_cross = 0.8;    // kind-B leak into text features
  std::uint64_t seed = 0;
};

struct ComplementaryFixture {
  corpus::Corpus corpus;
  features::FeatureMatrix text_features;
  features::FeatureMatrix audio_features;

  std::size_t total_utterances() const {
    std::size_t n = 0;
    for (const auto& e : corpus.events) n += e.utterances.size();
    return n;
  }
};

inline ComplementaryFixture make_complementary_fixture(const ComplementarySpec& spec) {
  ComplementaryFixture fx;
  Rng rng(derive_seed(spec.seed, "complementary"));
  const int total_events = spec.train_events + spec.dev_events + spec.test_events;
  bool next_positive_is_text_kind = true;

  for (int e = 0; e < total_events; ++e) {
    corpus::Event event;
    event.event_id = "cx" + std::to_string(e + 1);
    event.split = e < spec.train_events ? corpus::Split::train
                 : e < spec.train_events + spec.dev_events ? corpus::Split::dev
                                                           : corpus::Split::test;
    for (int s = 0; s < spec.sentences_per_event; ++s) {
      corpus::Utterance u;
      u.event_id = event.event_id;
      u.line_no = s + 1;
      u.speaker = "SPEAKER";
      u.label = rng.bernoulli(spec.positive_rate) ? 1 : 0;
      bool text_kind = false;
      if (u.label == 1) {
        text_kind = next_positive_is_text_kind;
        next_positive_is_text_kind = !next_positive_is_text_kind;
      }
      u.text = u.label == 1 ? (text_kind ? "claim kind a" : "claim kind b")
                            : "no claim";
      event.utterances.push_back(u);

      std::vector<double> text_row(static_cast<std::size_t>(spec.text_dim));
      for (auto& v : text_row) v = rng.normal();
      std::vector<double> audio_row(static_cast<std::size_t>(spec.audio_dim));
      for (auto& v : audio_row) v = rng.normal();
      if (u.label == 1 && text_kind) {
        for (std::size_t d = 0; d < 3; ++d) text_row[d] += spec.text_signal;
        for (std::size_t d = 4; d < 7; ++d) audio_row[d] += spec.audio_cross;
      } else if (u.label == 1) {
        for (std::size_t d = 0; d < 3; ++d) audio_row[d] += spec.audio_signal;
        for (std::size_t d = 4; d < 7; ++d) text_row[d] += spec.text_cross;
      }
      const features::FeatureKey key{event.event_id, u.line_no};
      fx.text_features.push_row(key, text_row);
      fx.audio_features.push_row(key, audio_row);
    }
    fx.corpus.events.push_back(std::move(event));
  }
  return fx;
}

}  // namespace claimrank::fixture
