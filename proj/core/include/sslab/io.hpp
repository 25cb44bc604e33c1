#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace sslab {

// 17 significant digits: enough for a lossless text round trip of a double.
std::string format_double(double v);

// Minimal CSV emitter with a fixed column order. Numeric cells go through
// format_double so output files are bit-identical across runs.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& cells);
  const std::string& path() const { return path_; }
  size_t columns() const { return columns_; }

 private:
  std::ofstream out_;
  std::string path_;
  size_t columns_;
};

std::string cell(double v);
std::string cell(uint64_t v);
std::string cell(int64_t v);
std::string cell(int v);
std::string cell(const std::string& s);

}  // namespace sslab
