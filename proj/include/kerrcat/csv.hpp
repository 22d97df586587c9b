#pragma once

#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace kerrcat::csv {

/// Fixed 15-significant-digit rendering; identical inputs give identical bytes.
inline std::string format(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

inline std::string cell(double x) { return format(x); }
inline std::string cell(int x) { return std::to_string(x); }
inline std::string cell(std::string_view s) { return std::string(s); }
inline std::string cell(const std::string& s) { return s; }
inline std::string cell(const char* s) { return s; }

class Writer {
 public:
  Writer(std::ostream& os, std::initializer_list<std::string_view> header) : Writer(os, std::vector<std::string>(header.begin(), header.end())) {}

  Writer(std::ostream& os, const std::vector<std::string>& header) : os_(os) {
    bool first = true;
    for (const auto& h : header) {
      if (!first) os_ << ',';
      os_ << h;
      first = false;
    }
    os_ << '\n';
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }

  void row(const std::vector<double>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << format(cells[i]);
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

}  // namespace kerrcat::csv
