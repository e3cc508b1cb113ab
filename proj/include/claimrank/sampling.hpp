#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "claimrank/corpus.hpp"
#include "claimrank/rng.hpp"

namespace claimrank::sampling {

enum class VariantKind { original, upsample_k, balanced_1to1 };

inline const char* variant_name(VariantKind k) {
  switch (k) {
    case VariantKind::original: return "original";
    case VariantKind::upsample_k: return "upsample_k";
    case VariantKind::balanced_1to1: return "balanced_1to1";
  }
  return "?";
}

struct VariantSpec {
  VariantKind kind = VariantKind::original;
  int k = 1;  // extra copies per positive; 15 -> x15, 30 -> x30
  std::uint64_t seed = 0;
};

// "x15" means 15 additional copies per check-worthy row (16 occurrences in
// total): with 417 positives that yields 6,672 positive rows and 12,927 for
// x30, which is the arithmetic the sampling ratios require. Originals stay
// in place; copies are appended after the whole sequence grouped by source
// row order.
inline std::vector<corpus::Utterance> upsample_positives(
    const std::vector<corpus::Utterance>& train, int k) {
  if (k < 1) throw ValidationError("upsample_positives: k must be >= 1");
  std::vector<corpus::Utterance> out = train;
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (train[i].label == 1) positives.push_back(i);
  out.reserve(train.size() + positives.size() * static_cast<std::size_t>(k));
  for (std::size_t p : positives)
    for (int c = 0; c < k; ++c) out.push_back(train[p]);
  return out;
}

// Removes random non-check-worthy rows until both classes have the same
// count. Survivors keep their relative order; the selection is drawn without
// replacement from the seeded generator.
inline std::vector<corpus::Utterance> undersample_balanced(
    const std::vector<corpus::Utterance>& train, std::uint64_t seed) {
  std::vector<std::size_t> positives, negatives;
  for (std::size_t i = 0; i < train.size(); ++i)
    (train[i].label == 1 ? positives : negatives).push_back(i);
  if (positives.empty())
    throw ValidationError("undersample_balanced: cannot balance, no check-worthy rows");
  if (negatives.size() <= positives.size()) return train;

  std::vector<std::size_t> pool = negatives;
  Rng rng(derive_seed(seed, "undersample"));
  rng.shuffle(pool);
  pool.resize(positives.size());
  std::vector<bool> keep_negative(train.size(), false);
  for (std::size_t i : pool) keep_negative[i] = true;

  std::vector<corpus::Utterance> out;
  out.reserve(positives.size() * 2);
  for (std::size_t i = 0; i < train.size(); ++i)
    if (train[i].label == 1 || keep_negative[i]) out.push_back(train[i]);
  return out;
}

inline std::vector<corpus::Utterance> make_variant(
    const std::vector<corpus::Utterance>& train, const VariantSpec& spec) {
  switch (spec.kind) {
    case VariantKind::original: return train;
    case VariantKind::upsample_k: return upsample_positives(train, spec.k);
    case VariantKind::balanced_1to1: return undersample_balanced(train, spec.seed);
  }
  throw ConfigError("make_variant: unknown kind");
}

// Parses the CLI spelling of a variant: original | x<k> | 1to1 | 1:1.
inline VariantSpec parse_variant(const std::string& name, std::uint64_t seed) {
  VariantSpec spec;
  spec.seed = seed;
  if (name == "original") {
    spec.kind = VariantKind::original;
  } else if (name == "1to1" || name == "1:1") {
    spec.kind = VariantKind::balanced_1to1;
  } else if (name.size() > 1 && name[0] == 'x') {
    spec.kind = VariantKind::upsample_k;
    spec.k = static_cast<int>(parse_int(name.substr(1), "variant multiplier"));
    if (spec.k < 1) throw ConfigError("variant multiplier must be >= 1");
  } else {
    throw ConfigError("unknown variant '" + name + "' (expected original|x<k>|1to1)");
  }
  return spec;
}

// File suffix convention for written variants: train.x15.tsv, train.1to1.tsv, ...
inline std::string variant_suffix(const VariantSpec& spec) {
  switch (spec.kind) {
    case VariantKind::original: return "original";
    case VariantKind::upsample_k: return "x" + std::to_string(spec.k);
    case VariantKind::balanced_1to1: return "1to1";
  }
  return "unknown";
}

// Variant rows carry the owning event, so they are written as 5-column TSV
// (event_id first, then the transcript columns). Re-using the 4-column
// per-event transcript format would re-introduce duplicate line_no values,
// which transcripts reject.
inline void write_variant(const std::vector<corpus::Utterance>& rows,
                          const std::string& path) {
  std::string out;
  for (const auto& u : rows) {
    out += u.event_id + "\t" + std::to_string(u.line_no) + "\t" + u.speaker +
           "\t" + u.text + "\t" + std::to_string(u.label) + "\n";
  }
  write_file(path, out);
}

inline std::vector<corpus::Utterance> load_variant(const std::string& path) {
  std::vector<corpus::Utterance> rows;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = path + ":" + std::to_string(i + 1);
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != 5) throw ParseError(where + ": expected 5 columns");
    corpus::Utterance u;
    u.event_id = trim(fields[0]);
    u.line_no = parse_int(fields[1], where + " line_no");
    u.speaker = trim(fields[2]);
    u.text = fields[3];
    const long long label = parse_int(fields[4], where + " label");
    if (label != 0 && label != 1) throw ParseError(where + ": label must be 0 or 1");
    u.label = static_cast<int>(label);
    rows.push_back(std::move(u));
  }
  if (rows.empty()) throw ValidationError(path + ": empty variant file");
  return rows;
}

}  // namespace claimrank::sampling
