#include "sslab/io.hpp"

#include <cstdio>
#include <stdexcept>

namespace sslab {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : out_(path, std::ios::trunc), path_(path), columns_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open output file " + path);
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw std::runtime_error("csv row width mismatch in " + path_);
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw std::runtime_error("write failure on " + path_);
}

std::string cell(double v) { return format_double(v); }
std::string cell(uint64_t v) { return std::to_string(v); }
std::string cell(int64_t v) { return std::to_string(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(const std::string& s) { return s; }

}  // namespace sslab
