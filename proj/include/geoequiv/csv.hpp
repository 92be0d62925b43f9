#pragma once

#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

namespace geoequiv::csv {

// 17 significant digits round-trips every double.
inline std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Writer {
 public:
  Writer(std::ostream& out, const std::vector<std::string>& header) : out_(out), width_(header.size()) {
    write_cells(header);
  }

  void row(const std::vector<std::string>& cells) { write_cells(cells); }

  void row(std::initializer_list<double> values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(number(v));
    write_cells(cells);
  }

  std::size_t width() const { return width_; }

 private:
  void write_cells(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::ostream& out_;
  std::size_t width_;
};

}  // namespace geoequiv::csv
