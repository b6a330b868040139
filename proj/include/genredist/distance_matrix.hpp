#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "genredist/error.hpp"

namespace genredist {

namespace csv {

// Shortest representation that reads back to the same double.
inline std::string format_number(double value) {
  if (std::isnan(value)) return "NA";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

inline double parse_number(std::string_view text) {
  if (text == "NA" || text.empty()) return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error("bad number '" + std::string(text) + "'");
  return value;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        current += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

}  // namespace csv

// Symmetric matrix over category labels. Missing entries (a method could not
// compare the pair) are NaN and written as NA. Values may be negative.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::vector<std::string> labels, std::string method)
      : labels_(std::move(labels)),
        method_(std::move(method)),
        values_(labels_.size() * labels_.size(), std::numeric_limits<double>::quiet_NaN()) {
    for (std::size_t i = 0; i < labels_.size(); ++i) values_[i * labels_.size() + i] = 0.0;
  }

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& method() const { return method_; }
  void set_method(std::string method) { method_ = std::move(method); }

  double at(std::size_t i, std::size_t j) const { return values_[i * labels_.size() + j]; }

  // Sets both (i, j) and (j, i).
  void set(std::size_t i, std::size_t j, double value) {
    values_[i * labels_.size() + j] = value;
    values_[j * labels_.size() + i] = value;
  }

  bool has(std::size_t i, std::size_t j) const { return !std::isnan(at(i, j)); }

  std::size_t index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
      if (labels_[i] == label) return i;
    throw Error("label '" + std::string(label) + "' not in " + method_ + " matrix");
  }

  bool is_symmetric() const {
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j) {
        const double x = at(i, j), y = at(j, i);
        if (!(x == y || (std::isnan(x) && std::isnan(y)))) return false;
      }
    return true;
  }

  // Same matrix with rows/columns reordered to `labels`.
  DistanceMatrix reordered(const std::vector<std::string>& labels) const {
    if (labels.size() != labels_.size()) throw Error("label sets differ for " + method_);
    DistanceMatrix out(labels, method_);
    std::vector<std::size_t> map;
    for (const auto& l : labels) map.push_back(index_of(l));
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (std::size_t j = 0; j < labels.size(); ++j) out.values_[i * labels.size() + j] = at(map[i], map[j]);
    return out;
  }

  // Header row and first column hold the labels; the top-left cell holds the
  // method tag.
  std::string to_csv() const {
    std::ostringstream os;
    os << csv::quote(method_);
    for (const auto& l : labels_) os << ',' << csv::quote(l);
    os << '\n';
    for (std::size_t i = 0; i < size(); ++i) {
      os << csv::quote(labels_[i]);
      for (std::size_t j = 0; j < size(); ++j) os << ',' << csv::format_number(at(i, j));
      os << '\n';
    }
    return os.str();
  }

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << to_csv();
  }

  static DistanceMatrix from_csv(std::istream& in, const std::string& source = "matrix") {
    std::string line;
    if (!std::getline(in, line)) throw Error(source + ": empty distance matrix");
    auto header = csv::split_line(line);
    if (header.size() < 2) throw Error(source + ": header has no labels");
    std::vector<std::string> labels(header.begin() + 1, header.end());
    DistanceMatrix m(labels, header[0]);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!std::getline(in, line)) throw Error(source + ": missing row " + std::to_string(i + 1));
      auto fields = csv::split_line(line);
      if (fields.size() != labels.size() + 1 || fields[0] != labels[i])
        throw Error(source + ": row " + std::to_string(i + 1) + " malformed");
      for (std::size_t j = 0; j < labels.size(); ++j) {
        try {
          m.values_[i * labels.size() + j] = csv::parse_number(fields[j + 1]);
        } catch (const Error& e) {
          throw Error(source + ": row " + std::to_string(i + 1) + ": " + e.what());
        }
      }
    }
    if (!m.is_symmetric()) throw Error(source + ": matrix is not symmetric");
    return m;
  }

  static DistanceMatrix read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path.string());
    return from_csv(in, path.string());
  }

 private:
  std::vector<std::string> labels_;
  std::string method_;
  std::vector<double> values_;
};

}  // namespace genredist
