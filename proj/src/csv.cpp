#include "otimpute/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "otimpute/error.hpp"

namespace otimpute {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) +
                                      ": non-numeric cell '" + cell + "'");
  }
  return v;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  CsvTable table;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  table.header = split(line);
  if (table.header.empty()) throw Error(ErrorKind::Parse, "missing header row");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw Error(ErrorKind::Parse,
                  "line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c, line_no));
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Index>(rows.size()),
                      static_cast<Index>(table.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str());
}

void write_csv(const std::string& path, const Matrix& values,
               const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  out.precision(17);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j) out << ',';
      if (std::isnan(values(i, j))) out << "NA";
      else out << values(i, j);
    }
    out << '\n';
  }
}

void write_mask_csv(const std::string& path, const Mask& mask,
                    const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Index i = 0; i < mask.rows(); ++i) {
    for (Index j = 0; j < mask.cols(); ++j) out << (j ? "," : "") << int(mask(i, j));
    out << '\n';
  }
}

std::vector<std::string> default_header(Index cols) {
  std::vector<std::string> h;
  for (Index j = 0; j < cols; ++j) h.push_back("c" + std::to_string(j));
  return h;
}

}  // namespace otimpute
