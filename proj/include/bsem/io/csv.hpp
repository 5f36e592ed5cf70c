#pragma once

// CSV ingestion and output. Input is comma-separated with a header row, one
// row per respondent and `.` as decimal mark; fields may be double-quoted.

#include "bsem/core/types.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace bsem::io {

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
  std::vector<std::size_t> lines;  // file line of each data row
};

namespace detail {

/// Splits one record. Quotes may wrap a field; "" inside quotes is a quote.
inline std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false, was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      if (!field.empty() || was_quoted) throw InputError("line " + std::to_string(line_no) + ": stray quote in field " + std::to_string(out.size() + 1));
      quoted = was_quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  if (quoted) throw InputError("line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(std::move(field));
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

inline bool parse_double(const std::string& s, double& v) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto r = std::from_chars(first, last, v);
  return r.ec == std::errc() && r.ptr == last && std::isfinite(v);
}

}  // namespace detail

/// Parses CSV text. `source` names the input in error messages, which give
/// the file line and the 1-based data row.
[[nodiscard]] inline CsvTable parse_csv(std::istream& in, const std::string& source = "input") {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  auto where = [&](std::size_t row) {
    return source + ": line " + std::to_string(line_no) + " (data row " + std::to_string(row) + ")";
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_record(line, line_no);
    if (t.header.empty()) {
      for (auto& f : fields) {
        f = detail::trim(f);
        if (f.empty()) throw InputError(source + ": line " + std::to_string(line_no) + ": empty column name in header");
      }
      t.header = std::move(fields);
      continue;
    }
    const std::size_t row = rows.size() + 1;
    if (fields.size() != t.header.size()) {
      throw InputError(where(row) + ": expected " + std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> r(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto f = detail::trim(fields[j]);
      if (f.empty()) throw InputError(where(row) + ", column '" + t.header[j] + "': missing value (missing data is not supported)");
      if (!detail::parse_double(f, r[j])) {
        throw InputError(where(row) + ", column '" + t.header[j] + "': '" + f + "' is not a finite number");
      }
    }
    rows.push_back(std::move(r));
    t.lines.push_back(line_no);
  }
  if (t.header.empty()) throw InputError(source + ": no header row");
  if (rows.empty()) throw InputError(source + ": no data rows");
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return t;
}

[[nodiscard]] inline CsvTable read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open '" + path + "'");
  return parse_csv(f, path);
}

/// Binds a table to item descriptions. Columns are matched by name, so their
/// order in the file does not matter; extra columns are ignored. Categorical
/// values must be integer codes 0..m-1.
[[nodiscard]] inline Dataset bind_items(const CsvTable& t, const std::vector<ItemSpec>& items, const std::string& source = "input") {
  Dataset d;
  d.items = items;
  d.values.resize(t.values.rows(), static_cast<Eigen::Index>(items.size()));
  for (std::size_t j = 0; j < items.size(); ++j) {
    const auto it = std::find(t.header.begin(), t.header.end(), items[j].name);
    if (it == t.header.end()) throw InputError(source + ": no column named '" + items[j].name + "'");
    const auto col = static_cast<Eigen::Index>(it - t.header.begin());
    d.values.col(static_cast<Eigen::Index>(j)) = t.values.col(col);
    const int m = items[j].category_count();
    if (items[j].kind == ItemKind::continuous) continue;
    for (Eigen::Index i = 0; i < t.values.rows(); ++i) {
      const double v = t.values(i, col);
      if (v != std::floor(v) || v < 0 || v >= m) {
        std::ostringstream os;
        os << source << ": data row " << (i + 1) << " (line " << t.lines.at(static_cast<std::size_t>(i)) << "), column '" << items[j].name << "': value " << v
           << " is not a category code in 0.." << (m - 1);
        throw InputError(os.str());
      }
    }
  }
  return d;
}

inline void write_csv(std::ostream& os, const std::vector<std::string>& header, const Matrix& values) {
  for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
  os << "\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) os << (j ? "," : "") << values(i, j);
    os << "\n";
  }
}

inline void write_csv(const std::string& path, const Dataset& d) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open '" + path + "' for writing");
  std::vector<std::string> header;
  for (const auto& it : d.items) header.push_back(it.name);
  write_csv(f, header, d.values);
}

}  // namespace bsem::io
