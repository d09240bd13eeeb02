#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "otimpute/error.hpp"
#include "otimpute/imputers.hpp"

namespace otimpute {

namespace {

constexpr double kMinRidge = 1e-6;

/// Ridge regression with an unpenalized intercept.
LinearColumnParams fit_ridge(const Matrix& features, const Vector& target,
                             double ridge) {
  const Vector mu = features.colwise().mean().transpose();
  const double y_mean = target.mean();
  const Matrix centered = features.rowwise() - mu.transpose();
  Matrix gram = centered.transpose() * centered;
  gram.diagonal().array() += std::max(ridge, kMinRidge);
  const Vector rhs = centered.transpose() * (target.array() - y_mean).matrix();
  LinearColumnParams params;
  params.weights = gram.ldlt().solve(rhs);
  params.bias = y_mean - mu.dot(params.weights);
  if (!params.weights.allFinite() || !std::isfinite(params.bias)) {
    throw Error(ErrorKind::NumericalFailure, "ridge regression produced non-finite weights");
  }
  return params;
}

}  // namespace

Matrix fill_with(const IncompleteMatrix& x, const Vector& means) {
  if (means.size() != x.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "expected " + std::to_string(x.cols()) + " means, got " +
                    std::to_string(means.size()));
  }
  Matrix out = x.values();
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i)
      if (!x.observed(i, j)) out(i, j) = means(j);
  return out;
}

Matrix impute_mean(const IncompleteMatrix& x) { return fill_with(x, x.observed_means()); }

IceFit ice_fit(const IncompleteMatrix& x, const IceConfig& cfg, RoundRobinModel* model) {
  const Index d = x.cols();
  if (d < 2) throw Error(ErrorKind::InvalidArgument, "ice needs at least two columns");
  if (cfg.max_cycles < 1) throw Error(ErrorKind::InvalidArgument, "ice needs max_cycles >= 1");

  const Mask& mask = x.mask();
  IceFit fit;
  fit.imputed = impute_mean(x);
  const IndexList order = visit_order(mask);
  std::vector<ColumnParams> params(static_cast<std::size_t>(d));

  for (int cycle = 0; cycle < cfg.max_cycles; ++cycle) {
    double max_change = 0.0;
    for (Index j : order) {
      IndexList seen;
      for (Index i = 0; i < x.rows(); ++i)
        if (mask(i, j)) seen.push_back(i);
      Vector target(static_cast<Index>(seen.size()));
      for (std::size_t k = 0; k < seen.size(); ++k)
        target(static_cast<Index>(k)) = fit.imputed(seen[k], j);
      const LinearColumnParams p =
          fit_ridge(feature_rows(fit.imputed, seen, j), target, cfg.ridge);
      params[static_cast<std::size_t>(j)] = p;

      const Matrix before = fit.imputed.col(j);
      impute_column(p, mask, j, fit.imputed);
      max_change = std::max(max_change, (fit.imputed.col(j) - before).cwiseAbs().maxCoeff());
    }
    fit.cycles_run = cycle + 1;
    if (max_change < cfg.tol) break;
  }

  if (model != nullptr) {
    model->kind = ModelKind::Linear;
    model->params = std::move(params);
    model->means = x.observed_means();
    model->order = order;
    model->cycles = fit.cycles_run;
    model->epsilon = 0.0;
  }
  return fit;
}

Matrix impute_ice(const IncompleteMatrix& x, const IceConfig& cfg) {
  return ice_fit(x, cfg, nullptr).imputed;
}

}  // namespace otimpute
