#pragma once

#include "chplsim/model.hpp"

#include <iosfwd>
#include <string>

namespace chplsim {

// CSV schema: header row `y,x1..x{d_X},w1..w{d_W}`, decimal point only,
// LF or CRLF line endings. Ingestion failures throw DataError naming the
// offending row and column.
Series read_series_csv(std::istream& in, const ModelSpec& spec);
Series read_series_csv_file(const std::string& path, const ModelSpec& spec);

void write_series_csv(std::ostream& out, const Series& series);
void write_series_csv_file(const std::string& path, const Series& series);

}  // namespace chplsim
