#include "otimpute/data.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "otimpute/error.hpp"

namespace otimpute {

namespace {

constexpr double kMinStd = 1e-12;

void check_columns_observed(const Mask& mask,
                            const std::vector<std::string>& names) {
  for (Index j = 0; j < mask.cols(); ++j) {
    bool any = false;
    for (Index i = 0; i < mask.rows() && !any; ++i) any = mask(i, j) != 0;
    if (!any) {
      const std::string label =
          static_cast<std::size_t>(j) < names.size()
              ? names[static_cast<std::size_t>(j)]
              : "column " + std::to_string(j);
      throw Error(ErrorKind::ColumnAllMissing,
                  label + " has no observed entry");
    }
  }
}

}  // namespace

IncompleteMatrix::IncompleteMatrix(const Matrix& values, const Mask& mask,
                                   std::vector<std::string> column_names)
    : values_(values), mask_(mask), names_(std::move(column_names)) {
  if (values.rows() != mask.rows() || values.cols() != mask.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "values and mask must have identical shapes");
  }
  if (!names_.empty() && static_cast<Index>(names_.size()) != values.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "column_names must have one label per column");
  }
  for (Index j = 0; j < mask_.cols(); ++j) {
    for (Index i = 0; i < mask_.rows(); ++i) {
      const auto m = mask_(i, j);
      if (m > 1) {
        throw Error(ErrorKind::InvalidArgument, "mask must contain only 0/1");
      }
      if (m == 0) {
        values_(i, j) = std::numeric_limits<double>::quiet_NaN();
      } else if (!std::isfinite(values_(i, j))) {
        throw Error(ErrorKind::InvalidArgument,
                    "observed entry (" + std::to_string(i) + ", " +
                        std::to_string(j) + ") is not finite");
      }
    }
  }
}

IncompleteMatrix IncompleteMatrix::from_nan(
    const Matrix& values_with_nan, std::vector<std::string> column_names) {
  Mask mask(values_with_nan.rows(), values_with_nan.cols());
  for (Index j = 0; j < mask.cols(); ++j)
    for (Index i = 0; i < mask.rows(); ++i)
      mask(i, j) = std::isnan(values_with_nan(i, j)) ? 0 : 1;
  return IncompleteMatrix(values_with_nan, mask, std::move(column_names));
}

IncompleteMatrix IncompleteMatrix::complete(
    const Matrix& values, std::vector<std::string> column_names) {
  return IncompleteMatrix(values, Mask::Ones(values.rows(), values.cols()),
                          std::move(column_names));
}

double IncompleteMatrix::at(Index i, Index j) const {
  if (mask_(i, j) == 0) {
    throw Error(ErrorKind::MaskedRead,
                "entry (" + std::to_string(i) + ", " + std::to_string(j) +
                    ") is missing");
  }
  return values_(i, j);
}

Index IncompleteMatrix::missing_count() const {
  return mask_.size() - mask_.cast<Index>().sum();
}

Index IncompleteMatrix::missing_count(Index column) const {
  return mask_.rows() - mask_.col(column).cast<Index>().sum();
}

double IncompleteMatrix::missing_fraction() const {
  if (mask_.size() == 0) return 0.0;
  return static_cast<double>(missing_count()) /
         static_cast<double>(mask_.size());
}

Vector IncompleteMatrix::observed_means() const {
  check_columns_observed(mask_, names_);
  Vector means(cols());
  for (Index j = 0; j < cols(); ++j) {
    double sum = 0.0;
    Index count = 0;
    for (Index i = 0; i < rows(); ++i) {
      if (mask_(i, j)) {
        sum += values_(i, j);
        ++count;
      }
    }
    means(j) = sum / static_cast<double>(count);
  }
  return means;
}

Matrix Standardization::apply(const Matrix& x) const {
  return (x.rowwise() - means.transpose()).array().rowwise() /
         stds.transpose().array();
}

Matrix Standardization::invert(const Matrix& z) const {
  return (z.array().rowwise() * stds.transpose().array()).matrix().rowwise() +
         means.transpose();
}

StandardizeResult standardize(const IncompleteMatrix& x) {
  const Index d = x.cols();
  Standardization t{x.observed_means(), Vector(d)};
  for (Index j = 0; j < d; ++j) {
    double ss = 0.0;
    Index count = 0;
    for (Index i = 0; i < x.rows(); ++i) {
      if (x.observed(i, j)) {
        const double diff = x.values()(i, j) - t.means(j);
        ss += diff * diff;
        ++count;
      }
    }
    const double sd = std::sqrt(ss / static_cast<double>(count));
    t.stds(j) = sd < kMinStd ? 1.0 : sd;
  }
  return {standardize_with(x, t), std::move(t)};
}

IncompleteMatrix standardize_with(const IncompleteMatrix& x,
                                  const Standardization& transform) {
  if (transform.means.size() != x.cols() || transform.stds.size() != x.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "standardization has " + std::to_string(transform.means.size()) +
                    " columns, data has " + std::to_string(x.cols()));
  }
  return IncompleteMatrix(transform.apply(x.values()), x.mask(),
                          x.column_names());
}

ImputationState initialize_imputation(const IncompleteMatrix& x, double eta,
                                      Rng& rng) {
  if (!(eta >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "eta must be nonnegative");
  }
  ImputationState state;
  state.mask = x.mask();
  state.data = x.values();
  state.means = x.observed_means();
  state.stds = Vector::Ones(x.cols());
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      if (!x.observed(i, j)) {
        state.data(i, j) = state.means(j) + (eta > 0.0 ? eta * noise(rng) : 0.0);
      }
    }
  }
  return state;
}

EmpiricalMeasure::EmpiricalMeasure(Matrix pts) : points(std::move(pts)) {
  if (points.rows() == 0) {
    throw Error(ErrorKind::InvalidArgument, "empirical measure is empty");
  }
  weights = Vector::Constant(points.rows(), 1.0 / static_cast<double>(points.rows()));
}

EmpiricalMeasure::EmpiricalMeasure(Matrix pts, Vector w)
    : points(std::move(pts)), weights(std::move(w)) {
  if (points.rows() == 0 || weights.size() != points.rows()) {
    throw Error(ErrorKind::InvalidWeights,
                "weights must have one entry per point");
  }
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
    throw Error(ErrorKind::InvalidWeights, "weights must lie on the simplex");
  }
}

IndexList sample_without_replacement(Index n, Index count, Rng& rng) {
  if (count > n) {
    throw Error(ErrorKind::BatchTooLarge, "cannot draw " + std::to_string(count) +
                                              " rows out of " + std::to_string(n));
  }
  IndexList pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(pool[static_cast<std::size_t>(k)],
              pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

BatchPair sample_batch_pair(Index n, Index m, Rng& rng) {
  if (m < 1) throw Error(ErrorKind::InvalidArgument, "batch size must be >= 1");
  if (m > n) {
    throw Error(ErrorKind::BatchTooLarge, "batch size " + std::to_string(m) +
                                              " exceeds n = " + std::to_string(n));
  }
  BatchPair pair;
  pair.first = sample_without_replacement(n, m, rng);
  pair.second = sample_without_replacement(n, m, rng);
  return pair;
}

std::optional<BatchPair> sample_batch_pair_stratified(const Mask& mask, Index m,
                                                      Index column, Rng& rng) {
  IndexList observed;
  IndexList missing;
  for (Index i = 0; i < mask.rows(); ++i) {
    (mask(i, column) ? observed : missing).push_back(i);
  }
  if (static_cast<Index>(observed.size()) < m || missing.empty()) {
    return std::nullopt;
  }
  BatchPair pair;
  for (Index k : sample_without_replacement(static_cast<Index>(observed.size()), m, rng)) {
    pair.first.push_back(observed[static_cast<std::size_t>(k)]);
  }
  const auto n_missing = static_cast<Index>(missing.size());
  if (n_missing >= m) {
    for (Index k : sample_without_replacement(n_missing, m, rng)) {
      pair.second.push_back(missing[static_cast<std::size_t>(k)]);
    }
  } else {
    std::uniform_int_distribution<Index> pick(0, n_missing - 1);
    for (Index k = 0; k < m; ++k) {
      pair.second.push_back(missing[static_cast<std::size_t>(pick(rng))]);
    }
  }
  return pair;
}

Index resolve_batch_size(Index n) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "batch size rule needs n >= 2");
  if (n > 256) return 128;
  Index m = 1;
  while (2 * m <= n / 2) m *= 2;
  return m;
}

Matrix gather_rows(const Matrix& x, const IndexList& rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = x.row(rows[k]);
  return out;
}

}  // namespace otimpute
