#pragma once

#include <string>
#include <vector>

#include "otimpute/types.hpp"

namespace otimpute {

/// Numeric table with a header row. Empty cells and `NA` become NaN.
struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

/// Writes with 17 significant digits; NaN is written as `NA`.
void write_csv(const std::string& path, const Matrix& values,
               const std::vector<std::string>& header);
void write_mask_csv(const std::string& path, const Mask& mask,
                    const std::vector<std::string>& header);

/// `c0, c1, ...` when a matrix has no names.
std::vector<std::string> default_header(Index cols);

}  // namespace otimpute
