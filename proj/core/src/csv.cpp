#include "diffgeo/csv.hpp"

#include <cstdio>

namespace diffgeo::csv {

std::string format(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_row(std::ostream &os, std::initializer_list<std::string> cells) {
  bool first = true;
  for (const auto &c : cells) {
    if (!first) os << ',';
    os << c;
    first = false;
  }
  os << '\n';
}

}  // namespace diffgeo::csv
