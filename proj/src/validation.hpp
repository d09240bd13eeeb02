#pragma once

#include "otimpute/imputers.hpp"

namespace otimpute::detail {

/// Observed entries temporarily hidden from an imputer so that recovery can
/// be scored while it trains.
class Holdout {
 public:
  Holdout(const IncompleteMatrix& x, const ValidationConfig& cfg);

  bool enabled() const noexcept { return !rows_.empty(); }
  /// The data the imputer trains on: hidden entries are marked missing.
  const IncompleteMatrix& training() const noexcept { return training_; }
  ValidationRecord score(int step, const Matrix& imputed) const;
  /// Puts the original observed values back into `imputed`.
  void restore(Matrix& imputed) const;

 private:
  const IncompleteMatrix* source_;
  IncompleteMatrix training_;
  IndexList rows_;
  IndexList cols_;
};

/// Independent 64-bit seeds derived from one base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace otimpute::detail
