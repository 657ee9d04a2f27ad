#pragma once

#include <string>
#include <vector>

#include "fqr/types.hpp"

namespace fqr {

/// Numeric CSV with a header row. Cells are parsed as doubles.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  Index column_index(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

/// Writes content to a temp file in the same directory, then renames it into
/// place, so failed runs never leave partial output.
void write_file_atomic(const std::string& path, const std::string& content);

std::string format_double(double v);

}  // namespace fqr
