#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "sgcl/errors.hpp"

namespace sgcl {

// Shortest round-trip decimal form, locale independent ("." separator).
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Line-oriented CSV writer with "\n" endings.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : os_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!os_) throw IoError("cannot open " + path.string() + " for writing");
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << cells[i];
    }
    os_ << '\n';
    if (!os_) throw IoError("write failed: " + path_.string());
  }

 private:
  std::ofstream os_;
  std::filesystem::path path_;
};

}  // namespace sgcl
