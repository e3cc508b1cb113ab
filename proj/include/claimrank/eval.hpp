#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "claimrank/corpus.hpp"
#include "claimrank/error.hpp"
#include "claimrank/io.hpp"

namespace claimrank::eval {

struct Prediction {
  std::string event_id;
  long long line_no = 0;
  double score = 0.0;
};

// Descending by score, ties broken by ascending line_no.
inline std::vector<long long> rank_event(std::vector<Prediction> preds) {
  std::set<long long> seen;
  for (const auto& p : preds) {
    if (!std::isfinite(p.score))
      throw ValidationError("rank_event: non-finite score for line " +
                            std::to_string(p.line_no));
    if (!seen.insert(p.line_no).second)
      throw ValidationError("rank_event: duplicate line_no " +
                            std::to_string(p.line_no));
  }
  std::sort(preds.begin(), preds.end(), [](const Prediction& a, const Prediction& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.line_no < b.line_no;
  });
  std::vector<long long> order;
  order.reserve(preds.size());
  for (const auto& p : preds) order.push_back(p.line_no);
  return order;
}

// Mean over positive ranks k of precision@k. Requires at least one positive;
// events without positives must be excluded by the caller.
inline double average_precision(const std::vector<int>& ranked_labels) {
  std::size_t positives_seen = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < ranked_labels.size(); ++k) {
    if (ranked_labels[k] == 1) {
      positives_seen += 1;
      sum += static_cast<double>(positives_seen) / static_cast<double>(k + 1);
    }
  }
  if (positives_seen == 0)
    throw ValidationError("average_precision: no positive labels");
  return sum / static_cast<double>(positives_seen);
}

// One scored-and-labelled utterance; the row form shared by the evaluator
// and the training loop's per-epoch dev scoring.
struct ScoredRow {
  std::string event_id;
  long long line_no = 0;
  double score = 0.0;
  int label = 0;
};

struct EvalReport {
  double map = 0.0;
  std::map<std::string, double> per_event;   // event_id -> AP
  std::vector<std::string> excluded_events;  // events without positives
  std::string run_id;
  std::string split;
  std::string checkpoint_id;
  std::string timestamp = "-";
  std::uint64_t seed = 0;
};

// MAP over events: AP per event with >= 1 positive, arithmetic mean across
// those events. Zero-positive events are excluded and listed.
inline EvalReport map_from_rows(const std::vector<ScoredRow>& rows) {
  std::map<std::string, std::vector<ScoredRow>> by_event;
  for (const auto& r : rows) by_event[r.event_id].push_back(r);

  EvalReport report;
  double sum = 0.0;
  std::size_t counted = 0;
  for (auto& [event_id, event_rows] : by_event) {
    bool has_positive = false;
    for (const auto& r : event_rows)
      if (r.label == 1) has_positive = true;
    if (!has_positive) {
      report.excluded_events.push_back(event_id);
      continue;
    }
    std::sort(event_rows.begin(), event_rows.end(),
              [](const ScoredRow& a, const ScoredRow& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.line_no < b.line_no;
              });
    std::vector<int> labels;
    labels.reserve(event_rows.size());
    std::set<long long> seen;
    for (const auto& r : event_rows) {
      if (!std::isfinite(r.score))
        throw ValidationError("map: non-finite score in event " + event_id);
      if (!seen.insert(r.line_no).second)
        throw ValidationError("map: duplicate line_no " + std::to_string(r.line_no) +
                              " in event " + event_id);
      labels.push_back(r.label);
    }
    const double ap = average_precision(labels);
    report.per_event[event_id] = ap;
    sum += ap;
    counted += 1;
  }
  if (counted == 0)
    throw ValidationError("map: no event with a positive label");
  report.map = sum / static_cast<double>(counted);
  return report;
}

// Joins predictions against the gold split and evaluates. Predictions must
// cover every utterance of the split exactly once.
inline EvalReport map_over_events(const std::vector<Prediction>& predictions,
                                  const corpus::Corpus& gold, corpus::Split split) {
  std::map<std::pair<std::string, long long>, int> gold_labels;
  for (const auto* e : gold.events_in(split))
    for (const auto& u : e->utterances)
      gold_labels[{e->event_id, u.line_no}] = u.label;

  std::map<std::pair<std::string, long long>, double> scored;
  std::vector<std::string> extra, duplicate;
  for (const auto& p : predictions) {
    const auto key = std::make_pair(p.event_id, p.line_no);
    if (!gold_labels.count(key)) {
      extra.push_back(p.event_id + ":" + std::to_string(p.line_no));
      continue;
    }
    if (!scored.emplace(key, p.score).second)
      duplicate.push_back(p.event_id + ":" + std::to_string(p.line_no));
  }
  std::vector<std::string> missing;
  for (const auto& [key, label] : gold_labels)
    if (!scored.count(key)) missing.push_back(key.first + ":" + std::to_string(key.second));

  auto list_keys = [](const std::vector<std::string>& keys) {
    std::string out;
    const std::size_t shown = std::min<std::size_t>(keys.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) {
      if (i) out += ", ";
      out += keys[i];
    }
    if (keys.size() > shown)
      out += ", ... (" + std::to_string(keys.size()) + " total)";
    return out;
  };
  if (!missing.empty())
    throw CoverageError("predictions missing " + std::to_string(missing.size()) +
                        " utterance(s): " + list_keys(missing));
  if (!extra.empty())
    throw CoverageError("predictions contain keys outside the split: " + list_keys(extra));
  if (!duplicate.empty())
    throw CoverageError("duplicate predictions for: " + list_keys(duplicate));

  std::vector<ScoredRow> rows;
  rows.reserve(scored.size());
  for (const auto& [key, score] : scored)
    rows.push_back({key.first, key.second, score, gold_labels.at(key)});
  EvalReport report = map_from_rows(rows);
  report.split = corpus::split_name(split);
  return report;
}

// Predictions TSV: <event_id>\t<line_no>\t<score>, scores at 6 decimals.
inline void write_predictions(const std::vector<Prediction>& preds,
                              const std::string& path) {
  std::string out;
  for (const auto& p : preds)
    out += p.event_id + "\t" + std::to_string(p.line_no) + "\t" +
           format_f6(p.score) + "\n";
  write_file(path, out);
}

inline std::vector<Prediction> load_predictions(const std::string& path) {
  std::vector<Prediction> preds;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = path + ":" + std::to_string(i + 1);
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != 3) throw ParseError(where + ": expected 3 columns");
    Prediction p;
    p.event_id = trim(fields[0]);
    p.line_no = parse_int(fields[1], where + " line_no");
    p.score = parse_double(fields[2], where + " score");
    preds.push_back(std::move(p));
  }
  return preds;
}

// Structured text report, one field per line.
inline std::string report_to_text(const EvalReport& r) {
  std::string out;
  out += "map\t" + format_f6(r.map) + "\n";
  for (const auto& [event_id, ap] : r.per_event)
    out += "event\t" + event_id + "\t" + format_f6(ap) + "\n";
  for (const auto& event_id : r.excluded_events)
    out += "excluded\t" + event_id + "\n";
  out += "run_id\t" + (r.run_id.empty() ? "-" : r.run_id) + "\n";
  out += "split\t" + (r.split.empty() ? "-" : r.split) + "\n";
  out += "checkpoint\t" + (r.checkpoint_id.empty() ? "-" : r.checkpoint_id) + "\n";
  out += "timestamp\t" + r.timestamp + "\n";
  out += "seed\t" + std::to_string(r.seed) + "\n";
  return out;
}

inline void write_report(const EvalReport& r, const std::string& path) {
  write_file(path, report_to_text(r));
}

inline EvalReport load_report(const std::string& path) {
  EvalReport r;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = path + ":" + std::to_string(i + 1);
    const auto f = split_tabs(lines[i]);
    if (f[0] == "map" && f.size() == 2) r.map = parse_double(f[1], where);
    else if (f[0] == "event" && f.size() == 3)
      r.per_event[f[1]] = parse_double(f[2], where);
    else if (f[0] == "excluded" && f.size() == 2) r.excluded_events.push_back(f[1]);
    else if (f[0] == "run_id" && f.size() == 2) r.run_id = f[1];
    else if (f[0] == "split" && f.size() == 2) r.split = f[1];
    else if (f[0] == "checkpoint" && f.size() == 2) r.checkpoint_id = f[1];
    else if (f[0] == "timestamp" && f.size() == 2) r.timestamp = f[1];
    else if (f[0] == "seed" && f.size() == 2)
      r.seed = static_cast<std::uint64_t>(parse_int(f[1], where));
    else throw ParseError(where + ": unknown report field '" + f[0] + "'");
  }
  return r;
}

// Comparison table over runs, sorted by MAP descending (percent scale, two
// decimals, matching the usual presentation); ties keep run_id order.
inline std::string compare_runs(std::vector<EvalReport> reports) {
  if (reports.empty()) throw ValidationError("compare_runs: no reports");
  std::stable_sort(reports.begin(), reports.end(),
                   [](const EvalReport& a, const EvalReport& b) {
                     if (a.map != b.map) return a.map > b.map;
                     return a.run_id < b.run_id;
                   });
  std::string out = "run_id\tsplit\tmap_pct\tn_events\tn_excluded\n";
  for (const auto& r : reports) {
    char map_pct[32];
    std::snprintf(map_pct, sizeof(map_pct), "%.2f", r.map * 100.0);
    out += (r.run_id.empty() ? "-" : r.run_id) + "\t" +
           (r.split.empty() ? "-" : r.split) + "\t" + map_pct + "\t" +
           std::to_string(r.per_event.size()) + "\t" +
           std::to_string(r.excluded_events.size()) + "\n";
  }
  return out;
}

}  // namespace claimrank::eval
