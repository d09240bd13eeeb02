#include "otimpute/assignment.hpp"

#include <limits>

#include "otimpute/error.hpp"

namespace otimpute {

Assignment solve_assignment(const Matrix& cost) {
  const Index n = cost.rows();
  if (cost.cols() != n) {
    throw Error(ErrorKind::SizeMismatch, "assignment needs a square cost matrix");
  }
  if (!cost.allFinite()) throw Error(ErrorKind::InvalidCost, "non-finite cost");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based: column 0 is a virtual source holding the row being inserted.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<Index> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const Index i0 = match[j0];
      double delta = kInf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < minv[j]) {
          minv[j] = reduced;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    // Flip the augmenting path.
    do {
      const Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment result;
  result.row_to_col.assign(static_cast<std::size_t>(n), 0);
  for (Index j = 1; j <= n; ++j) result.row_to_col[match[j] - 1] = j - 1;
  for (Index i = 0; i < n; ++i) result.cost += cost(i, result.row_to_col[i]);
  return result;
}

}  // namespace otimpute
