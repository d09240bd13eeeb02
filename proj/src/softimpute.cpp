#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "otimpute/error.hpp"
#include "otimpute/imputers.hpp"

namespace otimpute {

namespace {

Matrix zero_filled(const IncompleteMatrix& x) {
  Matrix out = x.values();
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i)
      if (!x.observed(i, j)) out(i, j) = 0.0;
  return out;
}

struct Entry {
  Index row;
  Index col;
};

/// Hides about `fraction` of each column's observed entries, keeping at least
/// one observed per column.
std::vector<Entry> pick_holdout(const Mask& mask, double fraction, Rng& rng) {
  std::vector<Entry> held;
  for (Index j = 0; j < mask.cols(); ++j) {
    IndexList seen;
    for (Index i = 0; i < mask.rows(); ++i)
      if (mask(i, j)) seen.push_back(i);
    const auto count = static_cast<Index>(seen.size());
    const Index take = std::min(
        count - 1, static_cast<Index>(std::floor(fraction * static_cast<double>(count))));
    if (take <= 0) continue;
    for (Index k : sample_without_replacement(count, take, rng))
      held.push_back({seen[static_cast<std::size_t>(k)], j});
  }
  return held;
}

}  // namespace

Vector soft_threshold(const Vector& singular_values, double lambda) {
  return (singular_values.array() - lambda).cwiseMax(0.0).matrix();
}

SoftImputeFit softimpute_fit(const IncompleteMatrix& x, double lambda,
                             const Matrix* warm_start, const SoftImputeConfig& cfg) {
  if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be nonnegative");
  const Mask& mask = x.mask();
  SoftImputeFit fit;
  if (warm_start != nullptr) {
    if (warm_start->rows() != x.rows() || warm_start->cols() != x.cols()) {
      throw Error(ErrorKind::DimensionMismatch, "warm start shape differs from data");
    }
    fit.low_rank = *warm_start;
  } else {
    fit.low_rank = Matrix::Zero(x.rows(), x.cols());
  }

  Matrix filled = x.values();
  for (int it = 0; it < cfg.max_iters; ++it) {
    for (Index j = 0; j < x.cols(); ++j)
      for (Index i = 0; i < x.rows(); ++i)
        if (!mask(i, j)) filled(i, j) = fit.low_rank(i, j);

    Eigen::BDCSVD<Matrix> svd(filled, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
      throw Error(ErrorKind::NumericalFailure, "SVD failed at lambda " + std::to_string(lambda));
    }
    const Vector shrunk = soft_threshold(svd.singularValues(), lambda);
    Matrix next = svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();

    const double step = (next - fit.low_rank).norm();
    const double scale = fit.low_rank.norm();
    fit.low_rank = std::move(next);
    fit.iterations = it + 1;
    if (step == 0.0 || (scale > 0.0 && step / scale < cfg.tol)) break;
  }
  return fit;
}

std::vector<double> default_lambda_grid(const IncompleteMatrix& x, int size) {
  if (size < 1) throw Error(ErrorKind::InvalidArgument, "grid size must be >= 1");
  Eigen::BDCSVD<Matrix> svd(zero_filled(x));
  const double top = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  std::vector<double> grid;
  for (int k = 0; k < size; ++k) {
    const double expo = size == 1 ? 0.0 : -4.0 * k / (size - 1);
    grid.push_back(top * std::pow(10.0, expo));
  }
  return grid;
}

SoftImputeResult impute_softimpute(const IncompleteMatrix& x,
                                   const std::vector<double>& grid,
                                   const SoftImputeConfig& cfg) {
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "lambda grid is empty");
  std::vector<std::size_t> path(grid.size());
  for (std::size_t k = 0; k < path.size(); ++k) path[k] = k;
  std::stable_sort(path.begin(), path.end(),
                   [&](std::size_t a, std::size_t b) { return grid[a] > grid[b]; });

  SoftImputeResult result;
  result.cv_rmse.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());

  Rng rng(cfg.seed);
  const std::vector<Entry> held = pick_holdout(x.mask(), cfg.cv_fraction, rng);
  std::size_t best = path.back();
  if (!held.empty()) {
    Mask cv_mask = x.mask();
    for (const Entry& e : held) cv_mask(e.row, e.col) = 0;
    const IncompleteMatrix cv_data(x.values(), cv_mask);
    Matrix warm = Matrix::Zero(x.rows(), x.cols());
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t k : path) {
      warm = softimpute_fit(cv_data, grid[k], &warm, cfg).low_rank;
      double ss = 0.0;
      for (const Entry& e : held) {
        const double diff = warm(e.row, e.col) - x.values()(e.row, e.col);
        ss += diff * diff;
      }
      result.cv_rmse[k] = std::sqrt(ss / static_cast<double>(held.size()));
      if (result.cv_rmse[k] < best_err) {
        best_err = result.cv_rmse[k];
        best = k;
      }
    }
  }

  result.lambda = grid[best];
  Matrix warm = Matrix::Zero(x.rows(), x.cols());
  for (std::size_t k : path) {
    if (grid[k] < result.lambda) break;
    warm = softimpute_fit(x, grid[k], &warm, cfg).low_rank;
  }
  result.imputed = x.values();
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i)
      if (!x.observed(i, j)) result.imputed(i, j) = warm(i, j);
  return result;
}

}  // namespace otimpute
