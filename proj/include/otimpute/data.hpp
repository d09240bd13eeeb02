#pragma once

#include <optional>
#include <string>
#include <vector>

#include "otimpute/types.hpp"

namespace otimpute {

/// An n x d real matrix with a binary observation mask. Unobserved entries
/// hold NaN placeholders and cannot be read through `at`.
class IncompleteMatrix {
 public:
  IncompleteMatrix() = default;

  /// Entries where `mask == 0` are replaced by NaN. Throws on shape
  /// mismatch, non-binary mask or non-finite observed values. Columns may be
  /// entirely missing (e.g. a single new row); fitting on such data fails
  /// with ColumnAllMissing.
  IncompleteMatrix(const Matrix& values, const Mask& mask,
                   std::vector<std::string> column_names = {});

  /// Builds a matrix from values where NaN marks a missing entry.
  static IncompleteMatrix from_nan(const Matrix& values_with_nan,
                                   std::vector<std::string> column_names = {});

  /// A fully observed matrix.
  static IncompleteMatrix complete(const Matrix& values,
                                   std::vector<std::string> column_names = {});

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }

  bool observed(Index i, Index j) const { return mask_(i, j) != 0; }
  /// Observed value at (i, j); throws `MaskedRead` on a missing entry.
  double at(Index i, Index j) const;

  const Mask& mask() const noexcept { return mask_; }
  /// Raw storage including NaN placeholders.
  const Matrix& values() const noexcept { return values_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }

  Index missing_count() const;
  Index missing_count(Index column) const;
  double missing_fraction() const;
  /// Column means over observed entries only; ColumnAllMissing when a
  /// column has none.
  Vector observed_means() const;

 private:
  Matrix values_;
  Mask mask_;
  std::vector<std::string> names_;
};

/// Per-column affine transform recorded by `standardize`.
struct Standardization {
  Vector means;
  Vector stds;

  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& z) const;
};

struct StandardizeResult {
  IncompleteMatrix data;
  Standardization transform;
};

/// Centers and scales each column to unit population variance using the
/// observed entries only. A std below 1e-12 is replaced by 1.
StandardizeResult standardize(const IncompleteMatrix& x);

/// Applies an existing transform (e.g. one fitted on a training split).
IncompleteMatrix standardize_with(const IncompleteMatrix& x,
                                  const Standardization& transform);

/// Current imputation: observed entries are fixed, missing ones mutable.
struct ImputationState {
  Matrix data;
  Mask mask;
  Vector means;
  Vector stds;

  Index rows() const noexcept { return data.rows(); }
  Index cols() const noexcept { return data.cols(); }
};

/// Missing entries get their column's observed mean plus N(0, eta^2) noise.
ImputationState initialize_imputation(const IncompleteMatrix& x, double eta,
                                      Rng& rng);

/// Uniform weights on the rows of `points`.
struct EmpiricalMeasure {
  Matrix points;
  Vector weights;

  explicit EmpiricalMeasure(Matrix pts);
  EmpiricalMeasure(Matrix pts, Vector w);

  Index size() const noexcept { return points.rows(); }
  Index dim() const noexcept { return points.cols(); }
};

struct BatchPair {
  IndexList first;
  IndexList second;
};

/// `count` distinct indices from [0, n), uniformly without replacement.
IndexList sample_without_replacement(Index n, Index count, Rng& rng);

/// Two independent batches of m distinct row indices each.
BatchPair sample_batch_pair(Index n, Index m, Rng& rng);

/// First batch from rows observed on `column`, second from rows missing on
/// it (with replacement when fewer than m exist). Returns nullopt when the
/// caller should fall back to `sample_batch_pair`: the column has fewer than
/// m observed rows or no missing row.
std::optional<BatchPair> sample_batch_pair_stratified(const Mask& mask, Index m,
                                                      Index column, Rng& rng);

/// 128 when n > 256, otherwise the largest power of two <= n / 2.
Index resolve_batch_size(Index n);

/// Rows of `x` at `rows`, in order.
Matrix gather_rows(const Matrix& x, const IndexList& rows);

}  // namespace otimpute
