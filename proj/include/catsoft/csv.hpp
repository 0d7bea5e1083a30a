#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "catsoft/errors.hpp"

namespace catsoft {

// Shortest round-trip formatting via to_chars, so output bytes are identical
// across platforms for identical doubles.
inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericError("format_number: to_chars failed");
  return std::string(buf, ptr);
}

inline std::string format_number(long v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw NumericError("format_number: to_chars failed");
  return std::string(buf, ptr);
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns)
      : out_(path, std::ios::binary), width_(columns.size()) {
    if (!out_) throw ConfigError("cannot open for writing: " + path);
    write_row_(columns);
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw ShapeError("csv row width mismatch");
    write_row_(cells);
  }

 private:
  void write_row_(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ofstream out_;
  std::size_t width_;
};

}  // namespace catsoft
