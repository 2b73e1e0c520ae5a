#include "pvc/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace pvc {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); i++) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

double CsvTable::number(size_t row, int col) const {
  if (col < 0 || row >= rows.size() || static_cast<size_t>(col) >= rows[row].size())
    throw FormatError("csv: missing value at data row " + std::to_string(row + 1));
  const std::string& s = rows[row][col];
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw FormatError("csv: '" + s + "' at data row " + std::to_string(row + 1) +
                      " is not a number");
  return v;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  for (size_t i = 0; i < table.header.size(); i++)
    os << (i ? "," : "") << table.header[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (size_t i = 0; i < row.size(); i++) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    const size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  CsvTable t;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    lineno++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (lineno == 1) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size())
        throw FormatError("'" + path.string() + "': row " + std::to_string(lineno) + " has " +
                          std::to_string(cells.size()) + " cells, header has " +
                          std::to_string(t.header.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw FormatError("'" + path.string() + "': empty csv");
  return t;
}

}  // namespace pvc
