#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "claimrank/error.hpp"
#include "claimrank/io.hpp"

namespace claimrank::corpus {

enum class Split { train, dev, test };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    case Split::test: return "test";
  }
  return "?";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  throw ParseError("unknown split '" + std::string(s) + "' (expected train|dev|test)");
}

// One transcript sentence. line_no is 1-based and unique within its event;
// label 1 marks a check-worthy claim.
struct Utterance {
  std::string event_id;
  long long line_no = 0;
  std::string speaker;
  std::string text;
  int label = 0;
};

// One debate/speech/interview: the unit rankings are evaluated over.
struct Event {
  std::string event_id;
  Split split = Split::train;
  std::vector<Utterance> utterances;
};

struct Corpus {
  std::vector<Event> events;

  const Event* find_event(const std::string& event_id) const {
    for (const auto& e : events)
      if (e.event_id == event_id) return &e;
    return nullptr;
  }

  const Utterance* find_utterance(const std::string& event_id, long long line_no) const {
    const Event* e = find_event(event_id);
    if (!e) return nullptr;
    for (const auto& u : e->utterances)
      if (u.line_no == line_no) return &u;
    return nullptr;
  }

  std::vector<const Event*> events_in(Split split) const {
    std::vector<const Event*> out;
    for (const auto& e : events)
      if (e.split == split) out.push_back(&e);
    return out;
  }
};

// Maps an utterance to a [start_ms, end_ms) range of a PCM audio file.
struct SegmentRef {
  std::string event_id;
  long long line_no = 0;
  std::string audio_path;
  long long start_ms = 0;
  long long end_ms = 0;
};

struct SplitStats {
  std::size_t n_events = 0;
  std::size_t n_sentences = 0;
  std::size_t n_checkworthy = 0;
  double fraction() const {
    return n_sentences == 0 ? 0.0
                            : static_cast<double>(n_checkworthy) /
                                  static_cast<double>(n_sentences);
  }
};

struct CorpusStats {
  SplitStats train, dev, test, all;

  const SplitStats& of(Split s) const {
    switch (s) {
      case Split::train: return train;
      case Split::dev: return dev;
      case Split::test: return test;
    }
    return all;
  }
};

// Transcript TSV row format: <line_no>\t<speaker>\t<sentence>\t<label>.
// Tabs inside sentences are rejected (they change the column count).
inline Event load_transcript(const std::string& path, const std::string& event_id,
                             Split split) {
  Event event;
  event.event_id = event_id;
  event.split = split;
  const auto lines = read_lines(path);
  long long prev_line_no = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(i + 1);
    const auto fields = split_tabs(line);
    if (fields.size() != 4)
      throw ParseError(where + ": expected 4 tab-separated columns, got " +
                       std::to_string(fields.size()));
    Utterance u;
    u.event_id = event_id;
    u.line_no = parse_int(fields[0], where + " line_no");
    if (u.line_no <= 0) throw ParseError(where + ": line_no must be positive");
    u.speaker = trim(fields[1]);
    if (u.speaker.empty()) throw ParseError(where + ": empty speaker");
    u.text = fields[2];
    const long long label = parse_int(fields[3], where + " label");
    if (label != 0 && label != 1)
      throw ParseError(where + ": label must be 0 or 1, got " + std::to_string(label));
    u.label = static_cast<int>(label);
    if (u.line_no == prev_line_no)
      throw ValidationError(where + ": duplicate line_no " + std::to_string(u.line_no));
    if (u.line_no < prev_line_no)
      throw ValidationError(where + ": line_no " + std::to_string(u.line_no) +
                            " not increasing");
    prev_line_no = u.line_no;
    event.utterances.push_back(std::move(u));
  }
  if (event.utterances.empty())
    throw ValidationError(path + ": no utterances");
  return event;
}

inline std::string transcript_to_tsv(const Event& event) {
  std::string out;
  for (const auto& u : event.utterances) {
    out += std::to_string(u.line_no);
    out += '\t';
    out += u.speaker;
    out += '\t';
    out += u.text;
    out += '\t';
    out += std::to_string(u.label);
    out += '\n';
  }
  return out;
}

inline void write_transcript(const Event& event, const std::string& path) {
  write_file(path, transcript_to_tsv(event));
}

// Split manifest TSV: <event_id>\t<train|dev|test>.
inline std::map<std::string, Split> load_split_manifest(const std::string& path) {
  std::map<std::string, Split> manifest;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = path + ":" + std::to_string(i + 1);
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != 2)
      throw ParseError(where + ": expected 2 columns");
    const std::string id = trim(fields[0]);
    if (manifest.count(id))
      throw ValidationError(where + ": duplicate event_id " + id);
    manifest[id] = parse_split(trim(fields[1]));
  }
  if (manifest.empty()) throw ValidationError(path + ": empty split manifest");
  return manifest;
}

inline void write_split_manifest(const Corpus& corpus, const std::string& path) {
  std::string out;
  for (const auto& e : corpus.events)
    out += e.event_id + "\t" + split_name(e.split) + "\n";
  write_file(path, out);
}

// Segment map TSV: <event_id>\t<line_no>\t<audio_path>\t<start_ms>\t<end_ms>.
// Every row must reference an existing utterance and a forward interval.
inline std::vector<SegmentRef> load_segment_map(const std::string& path,
                                                const Corpus& corpus) {
  std::vector<SegmentRef> refs;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = path + ":" + std::to_string(i + 1);
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != 5)
      throw ParseError(where + ": expected 5 columns, got " +
                       std::to_string(fields.size()));
    SegmentRef ref;
    ref.event_id = trim(fields[0]);
    ref.line_no = parse_int(fields[1], where + " line_no");
    ref.audio_path = trim(fields[2]);
    ref.start_ms = parse_int(fields[3], where + " start_ms");
    ref.end_ms = parse_int(fields[4], where + " end_ms");
    if (ref.start_ms < 0)
      throw ValidationError(where + ": negative start_ms");
    if (ref.end_ms <= ref.start_ms)
      throw ValidationError(where + ": end_ms " + std::to_string(ref.end_ms) +
                            " <= start_ms " + std::to_string(ref.start_ms));
    if (!corpus.find_utterance(ref.event_id, ref.line_no))
      throw ValidationError(where + ": segment references unknown utterance (" +
                            ref.event_id + ", " + std::to_string(ref.line_no) + ")");
    refs.push_back(std::move(ref));
  }
  return refs;
}

inline void write_segment_map(const std::vector<SegmentRef>& refs,
                              const std::string& path) {
  std::string out;
  for (const auto& r : refs) {
    out += r.event_id + "\t" + std::to_string(r.line_no) + "\t" + r.audio_path +
           "\t" + std::to_string(r.start_ms) + "\t" + std::to_string(r.end_ms) + "\n";
  }
  write_file(path, out);
}

// Keeps only utterances whose speaker equals `speaker` exactly (after
// whitespace trim at load time). Events left empty are dropped; split
// assignment is preserved. An empty result is legal.
inline Corpus filter_speaker(const Corpus& corpus, const std::string& speaker) {
  if (trim(speaker).empty()) throw ValidationError("filter_speaker: empty speaker");
  const std::string target = trim(speaker);
  Corpus out;
  for (const auto& e : corpus.events) {
    Event filtered;
    filtered.event_id = e.event_id;
    filtered.split = e.split;
    for (const auto& u : e.utterances)
      if (u.speaker == target) filtered.utterances.push_back(u);
    if (!filtered.utterances.empty()) out.events.push_back(std::move(filtered));
  }
  return out;
}

inline CorpusStats compute_stats(const Corpus& corpus) {
  CorpusStats stats;
  for (const auto& e : corpus.events) {
    SplitStats* s = nullptr;
    switch (e.split) {
      case Split::train: s = &stats.train; break;
      case Split::dev: s = &stats.dev; break;
      case Split::test: s = &stats.test; break;
    }
    s->n_events += 1;
    stats.all.n_events += 1;
    for (const auto& u : e.utterances) {
      s->n_sentences += 1;
      stats.all.n_sentences += 1;
      if (u.label == 1) {
        s->n_checkworthy += 1;
        stats.all.n_checkworthy += 1;
      }
    }
  }
  return stats;
}

// Flattened train-split utterance sequence in event order (sampling input).
inline std::vector<Utterance> split_utterances(const Corpus& corpus, Split split) {
  std::vector<Utterance> out;
  for (const auto& e : corpus.events) {
    if (e.split != split) continue;
    out.insert(out.end(), e.utterances.begin(), e.utterances.end());
  }
  return out;
}

// Corpus directory layout used by the CLI:
//   <dir>/splits.tsv            split manifest
//   <dir>/events/<event_id>.tsv transcripts
//   <dir>/segments.tsv          optional segment map
//   <dir>/audio/*.wav           recordings referenced by the segment map
inline Corpus load_corpus_dir(const std::string& dir) {
  const auto manifest = load_split_manifest(dir + "/splits.tsv");
  Corpus corpus;
  for (const auto& [event_id, split] : manifest)
    corpus.events.push_back(
        load_transcript(dir + "/events/" + event_id + ".tsv", event_id, split));
  return corpus;
}

}  // namespace claimrank::corpus
