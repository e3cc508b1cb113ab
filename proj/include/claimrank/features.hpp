#pragma once

#include <map>
#include <string>
#include <vector>

#include "claimrank/corpus.hpp"
#include "claimrank/io.hpp"
#include "claimrank/matrix.hpp"

namespace claimrank::features {

struct FeatureKey {
  std::string event_id;
  long long line_no = 0;

  bool operator<(const FeatureKey& o) const {
    if (event_id != o.event_id) return event_id < o.event_id;
    return line_no < o.line_no;
  }
  bool operator==(const FeatureKey& o) const {
    return event_id == o.event_id && line_no == o.line_no;
  }
  std::string str() const { return event_id + ":" + std::to_string(line_no); }
};

// Fixed-width real-valued feature rows keyed by (event_id, line_no).
struct FeatureMatrix {
  std::vector<FeatureKey> keys;
  Matrix<double> values;

  std::size_t dim() const { return values.cols; }
  std::size_t size() const { return keys.size(); }

  void push_row(FeatureKey key, const std::vector<double>& row) {
    if (values.rows == 0 && values.cols == 0) values.cols = row.size();
    if (row.size() != values.cols)
      throw ShapeError("feature row width " + std::to_string(row.size()) +
                       " != " + std::to_string(values.cols));
    keys.push_back(std::move(key));
    values.rows += 1;
    values.data.insert(values.data.end(), row.begin(), row.end());
  }

  const std::map<FeatureKey, std::size_t>& index() const {
    if (index_.size() != keys.size()) {
      index_.clear();
      for (std::size_t i = 0; i < keys.size(); ++i) index_[keys[i]] = i;
    }
    return index_;
  }

  std::size_t row_for(const FeatureKey& key) const {
    const auto& idx = index();
    auto it = idx.find(key);
    if (it == idx.end())
      throw ValidationError("missing feature row for " + key.str());
    return it->second;
  }

 private:
  mutable std::map<FeatureKey, std::size_t> index_;
};

// Feature CSV: header event_id,line_no,f0..f{d-1}; floats at 9 significant
// digits.
inline void write_feature_csv(const FeatureMatrix& fm, const std::string& path) {
  std::string out = "event_id,line_no";
  for (std::size_t c = 0; c < fm.dim(); ++c) out += ",f" + std::to_string(c);
  out += "\n";
  for (std::size_t r = 0; r < fm.size(); ++r) {
    out += fm.keys[r].event_id + "," + std::to_string(fm.keys[r].line_no);
    for (std::size_t c = 0; c < fm.dim(); ++c)
      out += "," + format_g9(fm.values(r, c));
    out += "\n";
  }
  write_file(path, out);
}

inline FeatureMatrix load_feature_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw ValidationError(path + ": empty feature file");
  FeatureMatrix fm;
  bool first = true;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    if (first) {  // header
      first = false;
      continue;
    }
    const std::string where = path + ":" + std::to_string(i + 1);
    std::vector<std::string> fields;
    std::size_t start = 0;
    const std::string& line = lines[i];
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() < 3) throw ParseError(where + ": expected at least 3 columns");
    FeatureKey key{trim(fields[0]), parse_int(fields[1], where + " line_no")};
    std::vector<double> row;
    row.reserve(fields.size() - 2);
    for (std::size_t c = 2; c < fields.size(); ++c)
      row.push_back(parse_double(fields[c], where));
    fm.push_row(std::move(key), row);
  }
  if (fm.size() == 0) throw ValidationError(path + ": no feature rows");
  return fm;
}

// Gathers feature rows for a list of utterances (training variants repeat
// keys) into a float matrix plus the label vector.
inline std::pair<Matrix<float>, std::vector<int>> gather_rows(
    const FeatureMatrix& fm, const std::vector<corpus::Utterance>& rows) {
  Matrix<float> x(rows.size(), fm.dim());
  std::vector<int> labels(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = fm.row_for({rows[i].event_id, rows[i].line_no});
    for (std::size_t c = 0; c < fm.dim(); ++c)
      x(i, c) = static_cast<float>(fm.values(r, c));
    labels[i] = rows[i].label;
  }
  return {std::move(x), std::move(labels)};
}

}  // namespace claimrank::features
