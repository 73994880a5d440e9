#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "swa/errors.hpp"

namespace swa {

/// Deterministic, round-trippable double formatting for CSV cells.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_cell(double v) { return fmt_double(v); }
inline std::string csv_cell(const std::string& s) { return s; }
inline std::string csv_cell(const char* s) { return s; }
template <class T>
  requires std::is_integral_v<T>
inline std::string csv_cell(T v) {
  return std::to_string(v);
}

class CsvWriter {
public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw IoError("cannot open for writing: " + path);
    write_cells(header);
  }

  template <class... Ts>
  void row(const Ts&... cells) {
    write_cells({csv_cell(cells)...});
  }

  void row_cells(const std::vector<std::string>& cells) { write_cells(cells); }

private:
  void write_cells(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }
  std::ofstream out_;
};

}  // namespace swa
