#pragma once

#include <string>

#include "otimpute/data.hpp"
#include "otimpute/types.hpp"

namespace otimpute {

enum class EpsilonRule { Absolute, MedianFraction };

struct SinkhornConfig {
  /// Regularization in squared-distance units. Ignored by `resolve_epsilon`
  /// when the rule is MedianFraction.
  double epsilon = 0.1;
  int max_iters = 1000;
  /// Stop when the worst marginal violation drops below this.
  double tol = 1e-6;
  EpsilonRule rule = EpsilonRule::Absolute;
  double median_fraction = 0.05;

  void validate() const;
};

struct TransportResult {
  Matrix plan;
  /// Dual potentials in cost units: plan_ij = a_i b_j exp((f_i + g_j - M_ij) / eps).
  Vector f;
  Vector g;
  /// <P, M> + eps * sum_ij P_ij log P_ij
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// M_ij = ||a_i - b_j||^2, clamped at zero.
Matrix pairwise_sq_dists(const Matrix& a, const Matrix& b);

/// Log-domain Sinkhorn for entropic OT between weights a and b under cost M.
TransportResult sinkhorn(const Vector& a, const Vector& b, const Matrix& cost,
                         const SinkhornConfig& cfg);

/// Entropic OT between two empirical measures with squared Euclidean cost.
TransportResult entropic_ot(const EmpiricalMeasure& alpha,
                            const EmpiricalMeasure& beta,
                            const SinkhornConfig& cfg);

/// OT(alpha, beta) - (OT(alpha, alpha) + OT(beta, beta)) / 2.
double sinkhorn_divergence(const EmpiricalMeasure& alpha,
                           const EmpiricalMeasure& beta,
                           const SinkhornConfig& cfg);

/// Divergence between two uniformly weighted batches and its gradient with
/// respect to every support point.
///
/// The cost convention is M = ||x - y||^2 throughout, so with plans held at
/// their optima the cross term contributes 2 sum_l P_kl (x_k - y_l) to point
/// x_k, and the self term OT(alpha, alpha) contributes the same expression
/// through both its rows and its columns, weighted by -1/2.
struct DivergenceGradient {
  double value = 0.0;
  Matrix grad_first;
  Matrix grad_second;
  /// False if any of the three Sinkhorn solves hit max_iters.
  bool converged = true;
  int iterations = 0;
};

/// Optional coordinate masks zero the gradient wherever mask == 1.
DivergenceGradient grad_divergence_points(const Matrix& first,
                                          const Matrix& second,
                                          const SinkhornConfig& cfg,
                                          const Mask* observed_first = nullptr,
                                          const Mask* observed_second = nullptr);

/// r times the median pairwise squared distance between rows of `data`
/// (evenly strided subsample of at most 1000 rows), floored at 1e-6.
double median_heuristic_epsilon(const Matrix& data, double fraction = 0.05);

/// Absolute epsilon, or the median rule applied to `data`.
double resolve_epsilon(const SinkhornConfig& cfg, const Matrix& data);

/// Squared 2-Wasserstein distance between two same-size uniform point
/// clouds, solved exactly as a linear assignment problem.
double exact_w2(const Matrix& a, const Matrix& b, Index cap = 4096);

/// Writes `<prefix>_plan.csv` and `<prefix>_potentials.csv`.
void write_transport_csv(const std::string& prefix, const TransportResult& result);

}  // namespace otimpute
