#pragma once
// Small numeric CSV table: labeled header row, double cells. Used for tick
// logs, polytope exports and flight-log input. Values are written with %.17g
// so logs round-trip exactly and byte-identical reruns stay byte-identical.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ftc {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int col(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    throw std::runtime_error("csv: no column named '" + name + "'");
  }
  bool has_col(const std::string& name) const {
    for (const auto& c : columns)
      if (c == name) return true;
    return false;
  }
  size_t size() const { return rows.size(); }
  double at(size_t row, const std::string& name) const { return rows[row][col(name)]; }

  std::vector<double> column(const std::string& name) const {
    int c = col(name);
    std::vector<double> out(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) out[i] = rows[i][c];
    return out;
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(t.columns.size());
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("csv: bad number '" + cell + "' at " + path + ":" +
                                 std::to_string(lineno));
      }
    }
    if (row.size() != t.columns.size())
      throw std::runtime_error("csv: wrong cell count at " + path + ":" + std::to_string(lineno));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_csv(const std::string& path, const CsvTable& t) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("csv: cannot write " + path);
  for (size_t i = 0; i < t.columns.size(); ++i)
    std::fprintf(f, "%s%s", t.columns[i].c_str(), i + 1 < t.columns.size() ? "," : "\n");
  for (const auto& row : t.rows)
    for (size_t i = 0; i < row.size(); ++i)
      std::fprintf(f, "%.17g%s", row[i], i + 1 < row.size() ? "," : "\n");
  std::fclose(f);
}

}  // namespace ftc
