#pragma once

#include <string>

#include "otimpute/types.hpp"

namespace otimpute {

/// Pointwise metrics average over entries with mask == 0. Each throws
/// NoMissingEntries when there are none.
double mae(const Matrix& truth, const Matrix& imputed, const Mask& mask);
double rmse(const Matrix& truth, const Matrix& imputed, const Mask& mask);

/// Exact squared W2 between the imputed and true rows that have at least one
/// missing entry. Throws TooLarge above `cap` rows.
double w2_metric(const Matrix& truth, const Matrix& imputed, const Mask& mask,
                 Index cap = 4096);

struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;
  double w2 = 0.0;
  /// Number of missing entries.
  Index m0 = 0;
  /// Number of rows with at least one missing entry.
  Index m1 = 0;
  bool w2_skipped = false;
  std::string w2_skip_reason;
  std::string scaling = "standardized";
};

/// All three metrics; W2 is skipped (not thrown) when m1 exceeds `cap`.
MetricReport evaluate(const Matrix& truth, const Matrix& imputed, const Mask& mask,
                      Index cap = 4096);

}  // namespace otimpute
