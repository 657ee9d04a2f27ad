#include "fqr/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fqr {

Index CsvTable::column_index(const std::string& name) const {
  for (Index i = 0; i < static_cast<Index>(columns.size()); ++i) {
    if (columns[i] == name) return i;
  }
  raise(ErrorCode::FileFormat, "missing column '" + name + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  // strip whitespace and CR
  for (auto& c : cells) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ' || c.back() == '\t')) c.pop_back();
    std::size_t i = 0;
    while (i < c.size() && (c[i] == ' ' || c[i] == '\t')) ++i;
    c.erase(0, i);
  }
  return cells;
}

double parse_double(const std::string& cell, const std::string& path, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    raise(ErrorCode::FileFormat,
          path + ":" + std::to_string(line_no) + ": cannot parse '" + cell + "' as a number");
  }
  return v;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::FileFormat, "cannot open file '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) raise(ErrorCode::FileFormat, path + ": empty file");
  table.columns = split_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (cells.size() != table.columns.size()) {
      raise(ErrorCode::FileFormat, path + ":" + std::to_string(line_no) + ": expected " +
                                       std::to_string(table.columns.size()) + " cells, got " +
                                       std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) row[i] = parse_double(cells[i], path, line_no);
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::FileFormat, "cannot open '" + tmp + "' for writing");
    out << content;
    if (!out) raise(ErrorCode::FileFormat, "failed writing '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    raise(ErrorCode::FileFormat, "cannot rename temp file onto '" + path + "'");
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace fqr
