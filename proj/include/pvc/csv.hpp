#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pvc/common.hpp"

namespace pvc {

// Minimal CSV: no quoting or embedded commas; numbers formatted with %.10g so
// files are byte-stable for identical inputs.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
  double number(size_t row, int col) const;   // FormatError names the 1-based data row
};

std::string format_number(double v);

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace pvc
