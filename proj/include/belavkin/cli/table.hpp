#pragma once

// Column tables and their CSV / JSON serialization. Numbers are written in
// the shortest decimal form that parses back to the same double.

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "belavkin/error.hpp"

namespace belavkin::cli {

class IoError : public Error {
 public:
  using Error::Error;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (columns[i] == name) return i;
    }
    throw DomainError("no column named " + name);
  }

  std::vector<double> values(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
};

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw IoError("not a number: '" + s + "'");
  return x;
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
  out += '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      out += format_double(r[i]);
    }
    out += '\n';
  }
  return out;
}

inline Table from_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream s(l);
    while (std::getline(s, cell, ',')) cells.push_back(cell);
    return cells;
  };
  if (!std::getline(in, line)) throw IoError("empty CSV");
  t.columns = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != t.columns.size()) throw IoError("ragged CSV row");
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

// JSON has no literal for non-finite values; they are written as strings.
inline std::string to_json(const Table& t) {
  std::string out = "{\"fields\":[";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? ",\"" : "\"") + t.columns[i] + "\"";
  out += "],\"rows\":[";
  for (std::size_t j = 0; j < t.rows.size(); ++j) {
    out += j ? ",[" : "[";
    for (std::size_t i = 0; i < t.rows[j].size(); ++i) {
      if (i) out += ',';
      const double x = t.rows[j][i];
      out += std::isfinite(x) ? format_double(x) : "\"" + format_double(x) + "\"";
    }
    out += ']';
  }
  out += "]}\n";
  return out;
}

inline Table from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Table t;
  t.columns = j.at("fields").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    std::vector<double> row;
    for (const auto& x : r) row.push_back(x.is_string() ? parse_double(x.get<std::string>()) : x.get<double>());
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("write to " + path + " failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace belavkin::cli
