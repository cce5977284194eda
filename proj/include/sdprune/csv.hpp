#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "sdprune/errors.hpp"

namespace sdprune {

/// Shortest float formatting that still round-trips; keeps CSV bytes stable
/// across reruns.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double parsed = std::strtod(buf, nullptr);
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == parsed) return shorter;
  }
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& header, const std::string& provenance)
      : out_(path) {
    if (!out_) throw ConfigError("cannot open for writing: " + path);
    out_ << "# " << provenance << "\n" << header << "\n";
  }

  CsvWriter& field(double v) {
    sep();
    out_ << fmt_double(v);
    return *this;
  }

  CsvWriter& field(std::size_t v) {
    sep();
    out_ << v;
    return *this;
  }

  CsvWriter& field(const std::string& v) {
    sep();
    out_ << v;
    return *this;
  }

  void end_row() {
    out_ << "\n";
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ",";
    first_ = false;
  }

  std::ofstream out_;
  bool first_ = true;
};

}  // namespace sdprune
