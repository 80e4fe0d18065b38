#include "chplsim/csv.hpp"

#include "chplsim/error.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace chplsim {

namespace {

std::vector<std::string> split_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

std::vector<std::string> expected_header(const ModelSpec& spec) {
  std::vector<std::string> names{"y"};
  for (int c = 1; c <= spec.d_X; ++c) names.push_back("x" + std::to_string(c));
  for (int c = 1; c <= spec.d_W; ++c) names.push_back("w" + std::to_string(c));
  return names;
}

double parse_cell(const std::string& cell, std::size_t row,
                  const std::string& column) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw DataError("csv: non-numeric cell at row " + std::to_string(row) +
                    ", column " + column);
  return value;
}

}  // namespace

Series read_series_csv(std::istream& in, const ModelSpec& spec) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: empty input");
  const std::vector<std::string> header = split_line(line);
  const std::vector<std::string> expected = expected_header(spec);
  if (header != expected) {
    std::string want;
    for (std::size_t k = 0; k < expected.size(); ++k)
      want += (k ? "," : "") + expected[k];
    throw DataError("csv: header mismatch, expected `" + want + "`");
  }

  std::vector<std::vector<double>> rows;
  std::size_t row_number = 1;  // header was row 1
  while (std::getline(in, line)) {
    ++row_number;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != expected.size())
      throw DataError("csv: row " + std::to_string(row_number) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(expected.size()));
    std::vector<double> parsed(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      parsed[c] = parse_cell(cells[c], row_number, expected[c]);
      if (!std::isfinite(parsed[c]))
        throw DataError("csv: non-finite value at row " +
                        std::to_string(row_number) + ", column " + expected[c]);
    }
    rows.push_back(std::move(parsed));
  }
  if (rows.empty()) throw DataError("csv: no data rows");

  Series series;
  const Eigen::Index n = Eigen::Index(rows.size());
  series.y.resize(n);
  series.x.resize(n, spec.d_X);
  series.w.resize(n, spec.d_W);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[std::size_t(i)];
    series.y(i) = row[0];
    for (int c = 0; c < spec.d_X; ++c) series.x(i, c) = row[std::size_t(1 + c)];
    for (int c = 0; c < spec.d_W; ++c)
      series.w(i, c) = row[std::size_t(1 + spec.d_X + c)];
  }
  return series;
}

Series read_series_csv_file(const std::string& path, const ModelSpec& spec) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open " + path);
  return read_series_csv(in, spec);
}

void write_series_csv(std::ostream& out, const Series& series) {
  out << "y";
  for (Eigen::Index c = 0; c < series.x.cols(); ++c) out << ",x" << (c + 1);
  for (Eigen::Index c = 0; c < series.w.cols(); ++c) out << ",w" << (c + 1);
  out << "\n";
  std::ostringstream buf;
  buf.precision(17);
  for (Eigen::Index i = 0; i < series.n(); ++i) {
    buf.str("");
    buf << series.y(i);
    for (Eigen::Index c = 0; c < series.x.cols(); ++c)
      buf << "," << series.x(i, c);
    for (Eigen::Index c = 0; c < series.w.cols(); ++c)
      buf << "," << series.w(i, c);
    out << buf.str() << "\n";
  }
}

void write_series_csv_file(const std::string& path, const Series& series) {
  std::ofstream out(path);
  if (!out) throw DataError("csv: cannot open " + path + " for writing");
  write_series_csv(out, series);
}

}  // namespace chplsim
