#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"

#include "otimpute/imputers.hpp"
#include "otimpute/masking.hpp"
#include "otimpute/metrics.hpp"
#include "otimpute/synthetic.hpp"

using namespace otimpute;
using testing::kind_of;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// x2 = slope * x1 with x1 complete and x2 missing at `rate`.
IncompleteMatrix linear_pair(Index n, double slope, double rate, Matrix& truth, Rng& rng) {
  truth = Matrix(n, 2);
  truth.col(0) = testing::gaussian(n, 1, rng).col(0);
  truth.col(1) = slope * truth.col(0);
  Mask mask = Mask::Ones(n, 2);
  std::bernoulli_distribution miss(rate);
  for (Index i = 0; i < n; ++i) mask(i, 1) = miss(rng) ? 0 : 1;
  return IncompleteMatrix(truth, mask);
}

void check_observed_unchanged(const IncompleteMatrix& x, const Matrix& imputed) {
  for (Index j = 0; j < x.cols(); ++j)
    for (Index i = 0; i < x.rows(); ++i)
      if (x.observed(i, j)) REQUIRE(imputed(i, j) == x.at(i, j));
  CHECK(imputed.allFinite());
}

}  // namespace

TEST_SUITE("imputers") {

TEST_CASE("mean imputation") {
  Matrix v(3, 2);
  v << 1, 5, kNaN, 6, 3, 7;
  const Matrix out = impute_mean(IncompleteMatrix::from_nan(v));
  CHECK(out(1, 0) == 2.0);
  CHECK(out(1, 1) == 6.0);

  Rng rng(1);
  const Matrix full = testing::gaussian(10, 3, rng);
  CHECK(impute_mean(IncompleteMatrix::complete(full)) == full);

  const Matrix g = testing::gaussian(200, 4, rng);
  Rng mrng(2);
  const StandardizeResult s = standardize(IncompleteMatrix(g, mcar_mask(200, 4, 0.3, mrng)));
  const Matrix z = impute_mean(s.data);
  for (Index j = 0; j < 4; ++j)
    for (Index i = 0; i < 200; ++i)
      if (!s.data.observed(i, j)) CHECK(std::abs(z(i, j)) < 1e-10);

  CHECK(kind_of([&] { (void)fill_with(s.data, Vector::Zero(3)); }) ==
        ErrorKind::DimensionMismatch);
}

TEST_CASE("ice recovers an exact linear relation") {
  Rng rng(3);
  Matrix truth;
  const IncompleteMatrix x = linear_pair(300, 2.0, 0.3, truth, rng);
  IceConfig cfg;
  cfg.max_cycles = 2;
  cfg.ridge = 1e-6;
  const Matrix out = impute_ice(x, cfg);
  check_observed_unchanged(x, out);
  for (Index i = 0; i < 300; ++i)
    if (!x.observed(i, 1)) CHECK(std::abs(out(i, 1) - 2.0 * truth(i, 0)) < 1e-6);
}

TEST_CASE("ice is the identity on complete data") {
  Rng rng(4);
  const Matrix full = testing::gaussian(40, 3, rng);
  CHECK(impute_ice(IncompleteMatrix::complete(full)) == full);
}

TEST_CASE("ice beats mean imputation on correlated data") {
  Rng rng(5);
  const Index n = 2000;
  Matrix truth = testing::gaussian(n, 2, rng);
  truth.col(1) = 0.9 * truth.col(0) + std::sqrt(1.0 - 0.81) * truth.col(1);
  Rng mrng(6);
  const Mask mask = mcar_mask(n, 2, 0.3, mrng);
  const IncompleteMatrix x(truth, mask);
  const double ice_rmse = rmse(truth, impute_ice(x), mask);
  const double mean_rmse = rmse(truth, impute_mean(x), mask);
  CHECK(ice_rmse < mean_rmse);
}

TEST_CASE("ice model reproduces its own imputation") {
  Rng rng(7);
  Matrix truth = make_equicorrelated_gaussian(300, 4, 0.5, rng);
  Rng mrng(8);
  const IncompleteMatrix x(truth, mcar_mask(300, 4, 0.2, mrng));
  RoundRobinModel model;
  const IceFit fit = ice_fit(x, IceConfig{}, &model);
  CHECK(model.kind == ModelKind::Linear);
  CHECK(model.params.size() == 4);
  CHECK(fit.cycles_run >= 1);
  check_observed_unchanged(x, rr_transform(model, x));
}

TEST_CASE("soft thresholding") {
  Vector s(3);
  s << 5, 3, 1;
  Vector expected(3);
  expected << 3, 1, 0;
  CHECK(soft_threshold(s, 2.0) == expected);
}

TEST_CASE("softimpute recovers a rank-one matrix at the end of the path") {
  Rng rng(9);
  const Matrix truth = testing::gaussian(100, 1, rng) * testing::gaussian(8, 1, rng).transpose();
  Rng mrng(10);
  const Mask mask = mcar_mask(100, 8, 0.2, mrng);
  const IncompleteMatrix x(truth, mask);
  const std::vector<double> grid = default_lambda_grid(x, 15);
  REQUIRE(grid.size() == 15);
  CHECK(grid.front() > grid.back());
  SoftImputeConfig cfg;
  cfg.max_iters = 5000;
  cfg.tol = 1e-9;
  Matrix z = Matrix::Zero(100, 8);
  for (double lambda : grid) z = softimpute_fit(x, lambda, &z, cfg).low_rank;
  CHECK(rmse(truth, z, mask) < 1e-3);
}

TEST_CASE("softimpute with lambda above the top singular value imputes zeros") {
  Rng rng(11);
  const Matrix g = testing::gaussian(60, 5, rng);
  Rng mrng(12);
  const StandardizeResult s = standardize(IncompleteMatrix(g, mcar_mask(60, 5, 0.3, mrng)));
  const double top = default_lambda_grid(s.data, 2).front();
  const SoftImputeResult r = impute_softimpute(s.data, {top * 1.01});
  check_observed_unchanged(s.data, r.imputed);
  for (Index j = 0; j < 5; ++j)
    for (Index i = 0; i < 60; ++i)
      if (!s.data.observed(i, j)) CHECK(r.imputed(i, j) == 0.0);
  CHECK(kind_of([&] { (void)impute_softimpute(s.data, {}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("softimpute cross-validation picks a grid value") {
  Rng rng(13);
  const Matrix truth = make_low_rank(200, 8, 2, 0.01, rng);
  Rng mrng(14);
  const IncompleteMatrix x(truth, mcar_mask(200, 8, 0.2, mrng));
  const std::vector<double> grid = default_lambda_grid(x, 10);
  const SoftImputeResult r = impute_softimpute(x, grid);
  CHECK(r.cv_rmse.size() == grid.size());
  CHECK(std::find(grid.begin(), grid.end(), r.lambda) != grid.end());
  check_observed_unchanged(x, r.imputed);
}

TEST_CASE("direct imputation is the identity on complete data") {
  Rng rng(15);
  const Matrix full = testing::gaussian(64, 3, rng);
  SinkhornImputerConfig cfg;
  cfg.iterations = 5;
  CHECK(impute_sinkhorn_direct(IncompleteMatrix::complete(full), cfg).imputed == full);
}

TEST_CASE("direct imputation keeps observed entries and is deterministic") {
  Rng rng(16);
  const Matrix truth = make_equicorrelated_gaussian(120, 3, 0.5, rng);
  Rng mrng(17);
  const IncompleteMatrix x(truth, mcar_mask(120, 3, 0.3, mrng));
  SinkhornImputerConfig cfg;
  cfg.iterations = 30;
  cfg.n_pairs = 2;
  cfg.seed = 5;
  const SinkhornImputeResult a = impute_sinkhorn_direct(x, cfg);
  const SinkhornImputeResult b = impute_sinkhorn_direct(x, cfg);
  check_observed_unchanged(x, a.imputed);
  CHECK(a.imputed == b.imputed);
  CHECK(a.losses.size() == 30);
  CHECK(a.epsilon > 0.0);
  cfg.seed = 6;
  CHECK_FALSE(impute_sinkhorn_direct(x, cfg).imputed == a.imputed);
}

TEST_CASE("direct imputation reports validation scores on schedule") {
  Rng rng(18);
  const Matrix truth = make_equicorrelated_gaussian(100, 3, 0.5, rng);
  Rng mrng(19);
  const IncompleteMatrix x(truth, mcar_mask(100, 3, 0.3, mrng));
  SinkhornImputerConfig cfg;
  cfg.iterations = 20;
  cfg.n_pairs = 1;
  cfg.monitor.fraction = 0.1;
  cfg.report_every = 5;
  const SinkhornImputeResult r = impute_sinkhorn_direct(x, cfg);
  CHECK(r.validation.size() == 4);
  check_observed_unchanged(x, r.imputed);
}

TEST_CASE("direct imputation rejects an oversized batch") {
  Rng rng(20);
  Matrix v = testing::gaussian(10, 2, rng);
  v(0, 0) = kNaN;
  SinkhornImputerConfig cfg;
  cfg.batch_size = 11;
  CHECK(kind_of([&] { (void)impute_sinkhorn_direct(IncompleteMatrix::from_nan(v), cfg); }) ==
        ErrorKind::BatchTooLarge);
}

TEST_CASE("round robin visit order") {
  Mask mask = Mask::Ones(5, 4);
  mask(0, 0) = mask(1, 0) = mask(2, 0) = 0;
  mask(0, 2) = 0;
  mask(3, 3) = mask(4, 3) = 0;
  CHECK(visit_order(mask) == IndexList{1, 2, 3, 0});
}

TEST_CASE("linear round robin agrees with ice on a linear relation") {
  // x2 = 2 x1 with only x2 missing, on standardized data as in the benchmarks.
  Rng rng(21);
  Matrix truth;
  const IncompleteMatrix raw = linear_pair(500, 2.0, 0.3, truth, rng);
  const StandardizeResult s = standardize(raw);
  const Matrix z_truth = s.transform.apply(truth);
  RoundRobinConfig cfg;
  cfg.seed = 3;
  const RoundRobinFit fit = rr_fit(s.data, cfg);
  const Matrix ice = impute_ice(s.data);
  CHECK(rmse(ice, fit.imputed, s.data.mask()) < 0.2);
  CHECK(rmse(z_truth, ice, s.data.mask()) < 1e-2);
  check_observed_unchanged(s.data, fit.imputed);

  // Smoothed training loss does not increase across cycles (5% slack).
  REQUIRE(fit.cycle_losses.size() == 10);
  for (std::size_t c = 1; c < fit.cycle_losses.size(); ++c)
    CHECK(fit.cycle_losses[c] <= 1.05 * fit.cycle_losses[c - 1]);
}

TEST_CASE("round robin is the identity on complete data") {
  Rng rng(22);
  const Matrix full = testing::gaussian(50, 3, rng);
  RoundRobinConfig cfg;
  cfg.kind = ModelKind::Mlp;
  const RoundRobinFit fit = rr_fit(IncompleteMatrix::complete(full), cfg);
  CHECK(fit.imputed == full);
}

TEST_CASE("fresh mlp round robin first predicts the column mean") {
  Rng rng(23);
  const Matrix truth = make_equicorrelated_gaussian(80, 3, 0.5, rng);
  Rng mrng(24);
  const IncompleteMatrix x(truth, mcar_mask(80, 3, 0.3, mrng));
  RoundRobinModel model;
  model.kind = ModelKind::Mlp;
  model.means = x.observed_means();
  model.order = visit_order(x.mask());
  model.cycles = 1;
  for (Index j = 0; j < 3; ++j) model.params.emplace_back(make_mlp(2, model.means(j), rng));
  const Matrix out = rr_transform(model, x);
  CHECK((out - fill_with(x, model.means)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("frozen round robin model on new data") {
  Rng rng(25);
  const Matrix truth = make_equicorrelated_gaussian(200, 3, 0.5, rng);
  Rng mrng(26);
  const IncompleteMatrix x(truth, mcar_mask(200, 3, 0.3, mrng));
  RoundRobinConfig cfg;
  cfg.kind = ModelKind::Mlp;
  cfg.cycles = 2;
  cfg.inner_steps = 5;
  cfg.n_pairs = 1;
  const RoundRobinFit fit = rr_fit(x, cfg);

  const Matrix fresh = testing::gaussian(5, 3, rng);
  CHECK(rr_transform(fit.model, IncompleteMatrix::complete(fresh)) == fresh);

  Matrix one(1, 3);
  one << 0.5, kNaN, -0.2;
  const Matrix out = rr_transform(fit.model, IncompleteMatrix::from_nan(one));
  CHECK(out.allFinite());
  CHECK(out(0, 0) == 0.5);
  CHECK(out(0, 2) == -0.2);

  CHECK(kind_of([&] {
          (void)rr_transform(fit.model, IncompleteMatrix::complete(Matrix::Zero(2, 4)));
        }) == ErrorKind::DimensionMismatch);
}

TEST_CASE("round robin argument checks") {
  Rng rng(27);
  Matrix v = testing::gaussian(20, 1, rng);
  v(0, 0) = kNaN;
  CHECK(kind_of([&] { (void)rr_fit(IncompleteMatrix::from_nan(v), RoundRobinConfig{}); }) ==
        ErrorKind::InvalidArgument);
}

}  // TEST_SUITE
