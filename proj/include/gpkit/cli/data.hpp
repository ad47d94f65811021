#pragma once

// CSV ingestion and the small text formats the command line reads and writes.
//
// CSV files are row-major (one observation per line) while the library takes
// inputs as a d x n column-major matrix; load_csv transposes on the way in,
// so X.col(i) is the i-th data row.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gpkit/core.hpp"

namespace gpkit::cli {

struct Dataset {
  MatrixXd X;  ///< d x n
  VectorXd y;  ///< n; empty when no response column was requested
  std::vector<std::string> x_names;
  std::string y_name;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  s = s.substr(first, last - first + 1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

/// Parses a full cell as a double; true/false map to 1/0.
inline bool parse_cell(const std::string& cell, double& out) {
  if (cell == "true" || cell == "TRUE" || cell == "True") return out = 1.0, true;
  if (cell == "false" || cell == "FALSE" || cell == "False") return out = 0.0, true;
  if (cell.empty()) return false;
  const char* b = cell.data();
  if (*b == '+') ++b;
  const auto res = std::from_chars(b, cell.data() + cell.size(), out);
  return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

inline bool is_index(const std::string& ref) {
  return !ref.empty() && std::all_of(ref.begin(), ref.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace detail

/// Splits "a,b,c" into trimmed, non-empty items.
inline std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  for (auto& item : detail::split(text, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

/// Reads the columns `x_cols` (names or 1-based indices; empty = every column
/// except y) and `y_col` (empty = no response) from a comma-separated file.
/// A header row is detected when any selected cell of the first row is not
/// numeric; column names then require a header.
inline Dataset load_csv(const std::string& path, const std::vector<std::string>& x_cols, const std::string& y_col) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file '" + path + "'");

  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_of;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (detail::trim(line).empty()) continue;
    rows.push_back(detail::split(line, ','));
    line_of.push_back(lineno);
  }
  if (rows.empty()) throw InputError("data file '" + path + "' is empty");
  const std::size_t width = rows[0].size();

  // Header detection looks at the cells that will be read.
  std::vector<std::string> refs = x_cols;
  if (!y_col.empty()) refs.push_back(y_col);
  const bool by_name = std::any_of(refs.begin(), refs.end(), [](const auto& r) { return !detail::is_index(r); });
  bool header = by_name;
  if (!header) {
    for (std::size_t c = 0; c < width && !header; ++c) {
      const bool selected = refs.empty() || std::any_of(refs.begin(), refs.end(), [&](const auto& r) {
                              return std::stoul(r) == c + 1;
                            });
      double v;
      if (selected && !detail::parse_cell(rows[0][c], v)) header = true;
    }
  }
  std::vector<std::string> names(width);
  for (std::size_t c = 0; c < width; ++c) names[c] = header ? rows[0][c] : "x" + std::to_string(c + 1);

  auto resolve = [&](const std::string& ref) -> std::size_t {
    if (detail::is_index(ref)) {
      const std::size_t i = std::stoul(ref);
      if (i < 1 || i > width)
        throw InputError("column " + ref + " out of range (file has " + std::to_string(width) + " columns)");
      return i - 1;
    }
    const auto it = std::find(names.begin(), names.end(), ref);
    if (it == names.end()) throw InputError("column \"" + ref + "\" not found in '" + path + "'");
    return static_cast<std::size_t>(it - names.begin());
  };
  std::vector<std::size_t> xi;
  const std::size_t yi = y_col.empty() ? width : resolve(y_col);
  if (x_cols.empty()) {
    for (std::size_t c = 0; c < width; ++c)
      if (c != yi) xi.push_back(c);
  } else {
    for (const auto& r : x_cols) xi.push_back(resolve(r));
  }
  if (xi.empty()) throw InputError("no input columns selected");

  const std::size_t first = header ? 1 : 0;
  const auto n = static_cast<Eigen::Index>(rows.size() - first);
  if (n < 1) throw InputError("data file '" + path + "' has a header but no rows");
  Dataset d;
  d.X.resize(static_cast<Eigen::Index>(xi.size()), n);
  if (!y_col.empty()) d.y.resize(n);
  for (auto c : xi) d.x_names.push_back(names[c]);
  if (!y_col.empty()) d.y_name = names[yi];

  auto cell = [&](std::size_t r, std::size_t c) {
    if (c >= rows[r].size())
      throw InputError("row " + std::to_string(line_of[r]) + ": missing column \"" + names[c] + "\"");
    double v;
    if (!detail::parse_cell(rows[r][c], v))
      throw InputError("row " + std::to_string(line_of[r]) + ", column \"" + names[c] + "\": non-numeric cell \"" +
                       rows[r][c] + "\"");
    return v;
  };
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto j = static_cast<Eigen::Index>(r - first);
    for (std::size_t k = 0; k < xi.size(); ++k) d.X(static_cast<Eigen::Index>(k), j) = cell(r, xi[k]);
    if (!y_col.empty()) d.y[j] = cell(r, yi);
  }
  return d;
}

/// 17 significant digits: every double survives a write/read round trip.
inline std::string format_17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes a header line and one line per row of `rows`.
inline void write_csv(const std::string& path, const std::vector<std::string>& header, const MatrixXd& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) out << (c ? "," : "") << format_17(rows(r, c));
    out << '\n';
  }
  if (!out) throw InputError("error writing '" + path + "'");
}

/// Ordered "key = value" pairs; '#' starts a comment, blank lines are ignored.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

inline KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  KeyValues kv;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    kv.emplace_back(std::move(key), detail::trim(line.substr(eq + 1)));
  }
  return kv;
}

inline void write_key_values(const std::string& path, const KeyValues& kv) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
}

}  // namespace gpkit::cli
