#pragma once

#include "otimpute/types.hpp"

namespace otimpute {

struct Assignment {
  /// row_to_col[i] is the column matched to row i.
  IndexList row_to_col;
  double cost = 0.0;
};

/// Minimum-cost perfect matching on a square cost matrix using shortest
/// augmenting paths with dual potentials, O(n^3).
Assignment solve_assignment(const Matrix& cost);

}  // namespace otimpute
