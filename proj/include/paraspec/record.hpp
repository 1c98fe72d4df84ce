#pragma once

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "paraspec/error.hpp"
#include "paraspec/field.hpp"

namespace paraspec {

using Cell = std::variant<double, std::int64_t, std::string>;

/// Column-named rows; the unit of CSV output.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw InvalidInput("Table: no column '" + name + "'");
  }
  void add(std::vector<Cell> row) {
    if (row.size() != columns.size()) throw InvalidInput("Table::add: row width does not match the header");
    rows.push_back(std::move(row));
  }
  double number(std::size_t row, const std::string& name) const {
    const Cell& c = rows.at(row).at(column(name));
    if (auto* d = std::get_if<double>(&c)) return *d;
    if (auto* i = std::get_if<std::int64_t>(&c)) return double(*i);
    throw InvalidInput("Table: column '" + name + "' is not numeric");
  }
  std::string text(std::size_t row, const std::string& name) const {
    const Cell& c = rows.at(row).at(column(name));
    if (auto* s = std::get_if<std::string>(&c)) return *s;
    throw InvalidInput("Table: column '" + name + "' is not text");
  }
  bool empty() const noexcept { return rows.empty(); }
};

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

/// RFC 4180: CRLF line ends, fields quoted when they contain a comma, quote or line break.
inline std::string to_csv(const Table& t) {
  auto esc = [](const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + esc(t.columns[i]);
  out += "\r\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      if (auto* d = std::get_if<double>(&r[i])) out += format_double(*d);
      else if (auto* n = std::get_if<std::int64_t>(&r[i])) out += std::to_string(*n);
      else out += esc(std::get<std::string>(r[i]));
    }
    out += "\r\n";
  }
  return out;
}

/**
 * Output of one experiment. Rows hold only reproducible data (no timings), so
 * a replay with the same config and seeds gives identical CSV; wall times go
 * to the summary.
 */
struct ExperimentRecord {
  std::string experiment;
  std::string config_hash;
  Table runs;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::string> diagnostics;
  std::map<std::string, Field> fields;  ///< named fields for heat maps
  bool complete = false;
};

}  // namespace paraspec
