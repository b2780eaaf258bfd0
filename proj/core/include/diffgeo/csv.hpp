#pragma once

// Pinned numeric formatting for every CSV the toolkit writes: 17
// significant digits, LF line endings.

#include <initializer_list>
#include <ostream>
#include <string>

namespace diffgeo::csv {

std::string format(double value);

/// Writes one row of already-formatted cells.
void write_row(std::ostream &os, std::initializer_list<std::string> cells);

}  // namespace diffgeo::csv
