#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "otimpute/column_models.hpp"
#include "otimpute/data.hpp"
#include "otimpute/optim.hpp"
#include "otimpute/ot.hpp"

namespace otimpute {

// ---------------------------------------------------------------------------
// Validation monitoring
// ---------------------------------------------------------------------------

/// Hides a fraction of observed entries during training and reports how well
/// they are recovered. Uses its own RNG stream, so the batch sampling
/// sequence of the imputer is unchanged.
struct ValidationConfig {
  double fraction = 0.0;  // 0 disables monitoring
  std::uint64_t seed = 0x5eed;
};

struct ValidationRecord {
  int step = 0;  // cycle (round robin) or iteration (direct)
  double mae = 0.0;
  double rmse = 0.0;
  double w2 = 0.0;
};

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// Missing entries take their column's observed mean.
Matrix impute_mean(const IncompleteMatrix& x);

/// Fills the missing entries of `x` with `means` (e.g. training-set means).
Matrix fill_with(const IncompleteMatrix& x, const Vector& means);

struct IceConfig {
  int max_cycles = 10;
  double ridge = 1e-3;
  /// Stop early once no imputation moves by more than this in a cycle.
  double tol = 1e-4;
};

struct RoundRobinModel;

struct IceFit {
  Matrix imputed;
  int cycles_run = 0;
};

/// Chained ridge regressions, columns visited by increasing missing count.
Matrix impute_ice(const IncompleteMatrix& x, const IceConfig& cfg = {});
/// Same, also returning the last regression per column as a linear
/// round-robin model usable on new data.
IceFit ice_fit(const IncompleteMatrix& x, const IceConfig& cfg, RoundRobinModel* model);

struct SoftImputeConfig {
  double cv_fraction = 0.1;
  int max_iters = 500;
  /// Relative Frobenius change that ends the inner iterations.
  double tol = 1e-5;
  std::uint64_t seed = 0;
};

/// max(s - lambda, 0), elementwise.
Vector soft_threshold(const Vector& singular_values, double lambda);

struct SoftImputeFit {
  Matrix low_rank;
  int iterations = 0;
};

/// Fits Z <- S_lambda(P_obs(X) + P_mis(Z)) from `warm_start` (zeros if null).
SoftImputeFit softimpute_fit(const IncompleteMatrix& x, double lambda,
                             const Matrix* warm_start = nullptr,
                             const SoftImputeConfig& cfg = {});

/// `size` values log-spaced from the top singular value of the zero-filled
/// matrix down to 1e-4 times it, in decreasing order.
std::vector<double> default_lambda_grid(const IncompleteMatrix& x, int size = 15);

struct SoftImputeResult {
  Matrix imputed;
  double lambda = 0.0;
  std::vector<double> cv_rmse;
};

/// Picks lambda on `grid` by hiding an extra `cv_fraction` of the observed
/// entries, then refits on everything observed.
SoftImputeResult impute_softimpute(const IncompleteMatrix& x,
                                   const std::vector<double>& grid,
                                   const SoftImputeConfig& cfg = {});

// ---------------------------------------------------------------------------
// Direct batch Sinkhorn imputation
// ---------------------------------------------------------------------------

/// Sinkhorn settings for imputation loops: median-rule epsilon and a looser
/// tolerance than the kernel default.
SinkhornConfig imputation_sinkhorn_defaults();

struct SinkhornImputerConfig {
  int iterations = 3000;
  /// 0 selects resolve_batch_size(n).
  Index batch_size = 0;
  int n_pairs = 10;
  RmsPropConfig optimizer{};
  double eta = 0.1;
  SinkhornConfig sinkhorn = imputation_sinkhorn_defaults();
  std::uint64_t seed = 0;
  ValidationConfig monitor{};
  /// Iterations between validation reports; 0 means iterations / 10.
  int report_every = 0;
  /// When set, the last cross-batch plan and potentials are written here.
  std::string debug_dump_prefix;
};

struct SinkhornImputeResult {
  Matrix imputed;
  double epsilon = 0.0;
  std::vector<double> losses;
  std::vector<ValidationRecord> validation;
  /// Iterations in which at least one Sinkhorn solve hit max_iters.
  int nonconverged_steps = 0;
};

SinkhornImputeResult impute_sinkhorn_direct(const IncompleteMatrix& x,
                                            const SinkhornImputerConfig& cfg);

// ---------------------------------------------------------------------------
// Round-robin Sinkhorn imputation
// ---------------------------------------------------------------------------

struct RoundRobinConfig {
  ModelKind kind = ModelKind::Linear;
  int cycles = 10;
  int inner_steps = 50;
  Index batch_size = 0;
  int n_pairs = 10;
  AdamConfig optimizer{1e-2, 0.9, 0.999, 1e-8, 1e-5};
  double eta = 0.1;
  SinkhornConfig sinkhorn = imputation_sinkhorn_defaults();
  /// Declares the data MCAR, enabling observed/missing stratified batches.
  bool mcar = false;
  std::uint64_t seed = 0;
  ValidationConfig monitor{};
};

struct RoundRobinModel {
  ModelKind kind = ModelKind::Linear;
  std::vector<ColumnParams> params;
  /// Training column means, used to initialize new data.
  Vector means;
  IndexList order;
  int cycles = 10;
  double epsilon = 0.0;

  Index dim() const noexcept { return means.size(); }
};

struct RoundRobinFit {
  Matrix imputed;
  RoundRobinModel model;
  /// Mean batch loss of each cycle.
  std::vector<double> cycle_losses;
  std::vector<ValidationRecord> validation;
  int nonconverged_steps = 0;
};

/// Columns ordered by increasing missing count (ties by index).
IndexList visit_order(const Mask& mask);

RoundRobinFit rr_fit(const IncompleteMatrix& x, const RoundRobinConfig& cfg);

/// Imputes new data with frozen parameters: training means first, then
/// `model.cycles` prediction sweeps over the columns.
Matrix rr_transform(const RoundRobinModel& model, const IncompleteMatrix& x_new);

/// Overwrites the missing entries of column j with the model's predictions.
void impute_column(const ColumnParams& params, const Mask& mask, Index column,
                   Matrix& data);

}  // namespace otimpute
