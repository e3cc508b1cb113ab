#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "claimrank/corpus.hpp"
#include "claimrank/error.hpp"
#include "claimrank/io.hpp"

namespace claimrank::text {

// Lowercases and splits on whitespace/punctuation boundaries. ASCII
// letters and digits are token characters; non-ASCII bytes are kept as
// letters (no Unicode tables, adequate for transcript text).
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    const bool token_char = std::isalnum(u) || u >= 0x80;
    if (token_char) {
      current.push_back(static_cast<char>(std::tolower(u)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

struct TfidfConfig {
  bool lowercase = true;
  int min_df = 1;
};

struct SparseVec {
  std::vector<std::pair<std::size_t, double>> entries;  // sorted by index

  std::vector<double> to_dense(std::size_t dim) const {
    std::vector<double> out(dim, 0.0);
    for (const auto& [i, v] : entries) out[i] = v;
    return out;
  }

  double l2_norm() const {
    double acc = 0.0;
    for (const auto& [i, v] : entries) acc += v * v;
    return std::sqrt(acc);
  }
};

struct TfidfModel {
  std::map<std::string, std::size_t> vocabulary;  // term -> index, lexicographic
  std::vector<double> idf;
  TfidfConfig config;

  std::size_t dim() const { return idf.size(); }
};

// Smooth idf: idf(t) = ln((1+N)/(1+df)) + 1. Vocabulary is the
// lexicographically sorted set of terms with df >= min_df.
inline TfidfModel fit_tfidf(const std::vector<std::vector<std::string>>& docs,
                            const TfidfConfig& config = {}) {
  std::map<std::string, std::size_t> df;
  std::size_t non_empty = 0;
  for (const auto& doc : docs) {
    if (doc.empty()) continue;
    non_empty += 1;
    std::set<std::string> unique;
    for (const auto& token : doc)
      unique.insert(config.lowercase ? [&] {
        std::string t = token;
        std::transform(t.begin(), t.end(), t.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        return t;
      }() : token);
    for (const auto& t : unique) df[t] += 1;
  }
  if (non_empty == 0)
    throw ValidationError("fit_tfidf: all documents are empty");

  TfidfModel model;
  model.config = config;
  const double n = static_cast<double>(docs.size());
  for (const auto& [term, count] : df) {
    if (static_cast<int>(count) < config.min_df) continue;
    const std::size_t index = model.vocabulary.size();
    model.vocabulary[term] = index;
    model.idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return model;
}

// Raw term counts weighted by idf, then L2-normalised. Out-of-vocabulary
// terms are ignored; a document of only such terms maps to the zero vector.
inline SparseVec transform_tfidf(const TfidfModel& model,
                                 const std::vector<std::string>& doc) {
  std::map<std::size_t, double> weights;
  for (const auto& token : doc) {
    std::string t = token;
    if (model.config.lowercase)
      std::transform(t.begin(), t.end(), t.begin(),
                     [](unsigned char c) { return std::tolower(c); });
    const auto it = model.vocabulary.find(t);
    if (it == model.vocabulary.end()) continue;
    weights[it->second] += model.idf[it->second];
  }
  SparseVec vec;
  vec.entries.assign(weights.begin(), weights.end());
  const double norm = vec.l2_norm();
  if (norm > 0.0)
    for (auto& [i, v] : vec.entries) v /= norm;
  return vec;
}

// Persisted form: one term per line (index = line number) plus an idf CSV
// with one value per line, same order.
inline void save_tfidf(const TfidfModel& model, const std::string& vocab_path,
                       const std::string& idf_path) {
  std::vector<std::string> terms(model.vocabulary.size());
  for (const auto& [term, index] : model.vocabulary) terms[index] = term;
  std::string vocab_out, idf_out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    vocab_out += terms[i] + "\n";
    idf_out += format_g9(model.idf[i]) + "\n";
  }
  write_file(vocab_path, vocab_out);
  write_file(idf_path, idf_out);
}

inline TfidfModel load_tfidf(const std::string& vocab_path, const std::string& idf_path,
                             const TfidfConfig& config = {}) {
  TfidfModel model;
  model.config = config;
  const auto terms = read_lines(vocab_path);
  const auto idf_lines = read_lines(idf_path);
  std::size_t index = 0;
  for (const auto& term : terms) {
    if (term.empty()) continue;
    model.vocabulary[term] = index++;
  }
  for (const auto& line : idf_lines) {
    if (line.empty()) continue;
    model.idf.push_back(parse_double(line, idf_path));
  }
  if (model.idf.size() != model.vocabulary.size())
    throw ValidationError("tfidf model: vocabulary/idf size mismatch");
  return model;
}

// The 18 named-entity types, frozen in alphabetical order. The tagger
// behind them is pluggable; this list only fixes the feature layout.
inline constexpr int kNumEntityTypes = 18;
inline const std::array<std::string_view, kNumEntityTypes>& entity_type_names() {
  static const std::array<std::string_view, kNumEntityTypes> names = {
      "CARDINAL", "DATE",    "EVENT",   "FAC",      "GPE",      "LANGUAGE",
      "LAW",      "LOC",     "MONEY",   "NORP",     "ORDINAL",  "ORG",
      "PERCENT",  "PERSON",  "PRODUCT", "QUANTITY", "TIME",     "WORK_OF_ART"};
  return names;
}

inline int entity_type_index(std::string_view name) {
  const auto& names = entity_type_names();
  for (int i = 0; i < kNumEntityTypes; ++i)
    if (names[static_cast<std::size_t>(i)] == name) return i;
  throw ParseError("unknown entity type '" + std::string(name) + "'");
}

using NeCountVector = std::array<int, kNumEntityTypes>;

class EntityTagger {
 public:
  virtual ~EntityTagger() = default;
  virtual NeCountVector count(const corpus::Utterance& utterance) const = 0;
};

// Reads precomputed annotations from a sidecar TSV:
//   <event_id>\t<line_no>\t<TYPE:count,TYPE:count,...>
// The counts column may be empty for sentences without entities. A sentence
// missing from the sidecar is an error at query time.
class SidecarTagger final : public EntityTagger {
 public:
  explicit SidecarTagger(const std::string& path) {
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      const std::string where = path + ":" + std::to_string(i + 1);
      const auto fields = split_tabs(lines[i]);
      if (fields.size() != 3) throw ParseError(where + ": expected 3 columns");
      NeCountVector counts{};
      const std::string spec = trim(fields[2]);
      if (!spec.empty()) {
        std::size_t start = 0;
        while (start <= spec.size()) {
          std::size_t comma = spec.find(',', start);
          if (comma == std::string::npos) comma = spec.size();
          const std::string item = trim(spec.substr(start, comma - start));
          if (!item.empty()) {
            const std::size_t colon = item.find(':');
            if (colon == std::string::npos)
              throw ParseError(where + ": expected TYPE:count, got '" + item + "'");
            const int type = entity_type_index(item.substr(0, colon));
            const long long n = parse_int(item.substr(colon + 1), where + " count");
            if (n < 0) throw ParseError(where + ": negative count");
            counts[static_cast<std::size_t>(type)] += static_cast<int>(n);
          }
          start = comma + 1;
        }
      }
      annotations_[{trim(fields[0]), parse_int(fields[1], where + " line_no")}] = counts;
    }
  }

  NeCountVector count(const corpus::Utterance& u) const override {
    const auto it = annotations_.find({u.event_id, u.line_no});
    if (it == annotations_.end())
      throw ValidationError("sidecar has no entity row for (" + u.event_id + ", " +
                            std::to_string(u.line_no) + ")");
    return it->second;
  }

 private:
  std::map<std::pair<std::string, long long>, NeCountVector> annotations_;
};

// Gazetteer/regex heuristics: capitalized tokens for PERSON/ORG/GPE, digit
// patterns for DATE/MONEY/PERCENT/ORDINAL/TIME/CARDINAL. A coarse stand-in
// for a real tagger, kept deterministic and dependency-free.
class HeuristicTagger final : public EntityTagger {
 public:
  NeCountVector count(const corpus::Utterance& u) const override {
    NeCountVector counts{};
    const auto words = raw_words(u.text);
    for (std::size_t i = 0; i < words.size(); ++i) {
      const std::string& w = words[i];
      const std::string next = i + 1 < words.size() ? lower(words[i + 1]) : "";
      if (w.empty()) continue;
      if (w[0] == '$' && has_digit(w)) {
        bump(counts, "MONEY");
        continue;
      }
      if (has_digit(w)) {
        if (w.back() == '%' || next == "percent" || next == "percentage") {
          bump(counts, "PERCENT");
        } else if (next == "dollars" || next == "dollar" || next == "cents") {
          bump(counts, "MONEY");
        } else if (is_time(w)) {
          bump(counts, "TIME");
        } else if (is_ordinal(w)) {
          bump(counts, "ORDINAL");
        } else if (is_year(w)) {
          bump(counts, "DATE");
        } else {
          bump(counts, "CARDINAL");
        }
        continue;
      }
      const std::string lw = lower(w);
      if (kMonths().count(lw)) {
        bump(counts, "DATE");
        continue;
      }
      // Capitalized tokens after the first word that are not stop words.
      if (i > 0 && std::isupper(static_cast<unsigned char>(w[0])) &&
          !kStopWords().count(lw)) {
        if (kGpeGazetteer().count(lw)) bump(counts, "GPE");
        else if (kOrgSuffixes().count(lw)) bump(counts, "ORG");
        else bump(counts, "PERSON");
      }
    }
    return counts;
  }

 private:
  static void bump(NeCountVector& counts, std::string_view type) {
    counts[static_cast<std::size_t>(entity_type_index(type))] += 1;
  }

  static std::vector<std::string> raw_words(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (const char ch : text) {
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!current.empty()) {
          words.push_back(strip_punct(current));
          current.clear();
        }
      } else {
        current.push_back(ch);
      }
    }
    if (!current.empty()) words.push_back(strip_punct(current));
    return words;
  }

  static std::string strip_punct(const std::string& w) {
    std::size_t b = 0, e = w.size();
    // keep leading '$' and trailing '%'
    while (b < e && std::ispunct(static_cast<unsigned char>(w[b])) && w[b] != '$') ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(w[e - 1])) && w[e - 1] != '%')
      --e;
    return w.substr(b, e - b);
  }

  static std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
  }

  static bool has_digit(const std::string& w) {
    return std::any_of(w.begin(), w.end(),
                       [](unsigned char c) { return std::isdigit(c); });
  }

  static bool is_year(const std::string& w) {
    if (w.size() != 4 || !std::all_of(w.begin(), w.end(), [](unsigned char c) {
          return std::isdigit(c);
        }))
      return false;
    const int y = std::stoi(w);
    return y >= 1600 && y <= 2100;
  }

  static bool is_time(const std::string& w) {
    const std::size_t colon = w.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= w.size()) return false;
    return std::all_of(w.begin(), w.begin() + static_cast<long>(colon),
                       [](unsigned char c) { return std::isdigit(c); }) &&
           std::all_of(w.begin() + static_cast<long>(colon) + 1, w.end(),
                       [](unsigned char c) { return std::isdigit(c); });
  }

  static bool is_ordinal(const std::string& w) {
    if (w.size() < 3) return false;
    const std::string suffix = lower(w.substr(w.size() - 2));
    return (suffix == "st" || suffix == "nd" || suffix == "rd" || suffix == "th") &&
           std::isdigit(static_cast<unsigned char>(w[0]));
  }

  static const std::set<std::string>& kMonths() {
    static const std::set<std::string> months = {
        "january", "february", "march",     "april",   "may",      "june",
        "july",    "august",   "september", "october", "november", "december"};
    return months;
  }

  static const std::set<std::string>& kStopWords() {
    static const std::set<std::string> words = {
        "i",    "the",  "a",    "an",  "and",  "but", "they", "we",
        "he",   "she",  "it",   "you", "this", "that", "these", "those",
        "there", "what", "when", "who", "how",  "why"};
    return words;
  }

  static const std::set<std::string>& kGpeGazetteer() {
    static const std::set<std::string> places = {
        "america",  "usa",     "china",   "russia",   "mexico",   "canada",
        "iran",     "iraq",    "israel",  "ukraine",  "germany",  "france",
        "ohio",     "florida", "texas",   "michigan", "wisconsin", "pennsylvania",
        "washington", "york"};
    return places;
  }

  static const std::set<std::string>& kOrgSuffixes() {
    static const std::set<std::string> suffixes = {
        "inc",      "corp",       "foundation", "university", "department",
        "committee", "administration", "party",  "congress",  "senate",
        "fbi",      "cia",        "nato",       "obamacare"};
    return suffixes;
  }
};

inline NeCountVector ne_counts(const corpus::Utterance& utterance,
                               const EntityTagger& tagger) {
  return tagger.count(utterance);
}

}  // namespace claimrank::text
