#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <vector>

#include "otimpute/assignment.hpp"
#include "otimpute/csv.hpp"
#include "otimpute/error.hpp"
#include "otimpute/ot.hpp"

namespace otimpute {

namespace {

/// out(c) = -eps * log sum_r exp(scaled(r, c) + shift(r))
void softmin_columns(const Matrix& scaled, const Vector& shift, double eps,
                     Vector& out) {
  Matrix tmp = scaled.colwise() + shift;
  const Eigen::RowVectorXd mx = tmp.colwise().maxCoeff();
  tmp.rowwise() -= mx;
  out = -eps * (mx.array() + tmp.array().exp().colwise().sum().log()).transpose().matrix();
}

double max_violation(const Vector& a, const Vector& f, const Vector& f_next,
                     double eps) {
  return (a.array() * (((f - f_next) / eps).array().exp() - 1.0).abs()).maxCoeff();
}

void check_weights(const Vector& w, const char* name) {
  if (w.size() == 0 || (w.array() < 0.0).any() || !w.allFinite() ||
      std::abs(w.sum() - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidWeights,
                std::string(name) + " is not a probability vector");
  }
}

/// Fills the plan from converged log-potentials.
void finish(const Matrix& scaled, const Vector& row_shift, const Vector& col_shift,
            TransportResult& out) {
  out.plan = ((scaled.colwise() + row_shift).rowwise() + col_shift.transpose())
                 .array()
                 .exp()
                 .matrix();
}

/// sum_i w_i (f_i + eps log w_i), skipping zero weights.
double weighted_potential(const Vector& w, const Vector& f, double eps) {
  double total = 0.0;
  for (Index i = 0; i < w.size(); ++i)
    if (w(i) > 0.0) total += w(i) * (f(i) + eps * std::log(w(i)));
  return total;
}

/// <P, M> + eps sum P log P, evaluated through the potentials: it equals the
/// primal expression when the marginals hold exactly and its error is second
/// order in the potentials' error otherwise.
double dual_cost(const Vector& a, const Vector& f, const Vector& b, const Vector& g,
                 double eps) {
  return weighted_potential(a, f, eps) + weighted_potential(b, g, eps);
}

Vector log_weights(const Vector& w) { return w.array().log().matrix(); }

/// exp((fbar_i + gbar_j - C_ij) / eps): the kernel rebased at absorbed
/// potentials, so scaling vectors stay near one.
Matrix rebased_kernel(const Matrix& scaled, const Vector& fbar, const Vector& gbar,
                      double eps) {
  return ((scaled.colwise() + fbar / eps).rowwise() + (gbar / eps).transpose())
      .array()
      .exp()
      .matrix();
}

bool usable(const Vector& scaling) {
  return scaling.allFinite() && scaling.minCoeff() > 0.0;
}

bool needs_absorb(const Vector& scaling) {
  constexpr double kBound = 1e50;
  return scaling.maxCoeff() > kBound || scaling.minCoeff() < 1.0 / kBound;
}

/// a_i |u_i / u_next_i - 1|: row marginal error of the scaled plan.
double scaled_violation(const Vector& a, const Vector& u, const Vector& u_next) {
  return (a.array() * (u.array() / u_next.array() - 1.0).abs()).maxCoeff();
}

/// Symmetric problem a = b, M = M^T: averaged fixed-point iteration
/// f <- (f + softmin f) / 2 on a single potential. Converges in far fewer
/// steps than alternating updates.
void symmetric_log_loop(const Matrix& scaled, const Vector& a, double eps,
                        const SinkhornConfig& cfg, Vector& f, int& it, bool& converged) {
  const Vector loga = log_weights(a);
  Vector s;
  for (;; ++it) {
    softmin_columns(scaled, f / eps + loga, eps, s);
    if (it > 0 && max_violation(a, f, s, eps) < cfg.tol) {
      converged = true;
      return;
    }
    if (it >= cfg.max_iters) return;
    f = it == 0 ? s : Vector(0.5 * (f + s));
  }
}

/// Same iteration in scaling form, f = fbar + eps log u, with matrix-vector
/// products in place of log-sum-exp passes. Falls back to the log domain if a
/// scaling leaves the representable range.
TransportResult sinkhorn_symmetric(const Vector& a, const Matrix& cost,
                                   const SinkhornConfig& cfg) {
  const double eps = cfg.epsilon;
  const Matrix scaled = -cost / eps;
  Vector fbar = Vector::Zero(a.size());
  Matrix kernel = scaled.array().exp().matrix();
  Vector u = Vector::Ones(a.size());
  TransportResult out;
  int it = 0;
  bool fallback = false;
  for (;; ++it) {
    // t = exp((softmin f - fbar) / eps)
    const Vector t = (kernel * a.cwiseProduct(u)).cwiseInverse();
    if (!usable(t)) {
      fallback = true;
      break;
    }
    if (it > 0 && scaled_violation(a, u, t) < cfg.tol) {
      out.converged = true;
      break;
    }
    if (it >= cfg.max_iters) break;
    u = it == 0 ? t : Vector(u.cwiseProduct(t).cwiseSqrt());
    if (needs_absorb(u)) {
      fbar += eps * u.array().log().matrix();
      u.setOnes();
      kernel = rebased_kernel(scaled, fbar, fbar, eps);
    }
  }
  Vector f = fbar + eps * u.array().log().matrix();
  if (fallback) symmetric_log_loop(scaled, a, eps, cfg, f, it, out.converged);
  out.iterations = it;
  const Vector shift = f / eps + log_weights(a);
  finish(scaled, shift, shift, out);
  out.cost = dual_cost(a, f, a, f, eps);
  out.f = f;
  out.g = f;
  return out;
}

/// Alternating log-domain updates from (f, g) at iteration `it`.
void alternating_log_loop(const Matrix& scaled, const Vector& a, const Vector& b,
                          double eps, const SinkhornConfig& cfg, Vector& f, Vector& g,
                          int& it, bool& converged) {
  const Matrix scaled_t = scaled.transpose();
  const Vector loga = log_weights(a);
  const Vector logb = log_weights(b);
  Vector f_next;
  for (;; ++it) {
    softmin_columns(scaled_t, g / eps + logb, eps, f_next);
    // After a g-update column sums are exact; row sums are a_i exp((f - f_next) / eps).
    if (it > 0 && max_violation(a, f, f_next, eps) < cfg.tol) {
      converged = true;
      return;
    }
    if (it >= cfg.max_iters) return;
    f = f_next;
    softmin_columns(scaled, f / eps + loga, eps, g);
  }
}

void check_cost(const Matrix& cost) {
  if (cost.hasNaN()) throw Error(ErrorKind::InvalidCost, "cost matrix contains NaN");
  if (!cost.allFinite()) throw Error(ErrorKind::InvalidCost, "cost matrix is not finite");
}

/// Envelope-rule gradient contributions of one transport term.
void add_cross_grad(const Matrix& plan, const Matrix& x, const Matrix& y,
                    double weight, Matrix& gx, Matrix& gy) {
  const Vector r = plan.rowwise().sum();
  const Vector c = plan.colwise().sum().transpose();
  gx.noalias() += weight * (r.asDiagonal() * x - plan * y);
  gy.noalias() += weight * (c.asDiagonal() * y - plan.transpose() * x);
}

}  // namespace

void SinkhornConfig::validate() const {
  if (!(epsilon > 0.0) && rule == EpsilonRule::Absolute) {
    throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  }
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "tol must be positive");
  if (max_iters < 1) throw Error(ErrorKind::InvalidArgument, "max_iters must be >= 1");
  if (rule == EpsilonRule::MedianFraction && !(median_fraction > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "median fraction must be positive");
  }
}

Matrix pairwise_sq_dists(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "point dimensions differ: " + std::to_string(a.cols()) + " vs " +
                    std::to_string(b.cols()));
  }
  Matrix m = Matrix::Zero(a.rows(), b.rows());
  for (Index k = 0; k < a.cols(); ++k) {
    m.array() += (a.col(k).replicate(1, b.rows()).rowwise() - b.col(k).transpose())
                     .array()
                     .square();
  }
  return m.cwiseMax(0.0);
}

TransportResult sinkhorn(const Vector& a, const Vector& b, const Matrix& cost,
                         const SinkhornConfig& cfg) {
  if (cost.rows() != a.size() || cost.cols() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch, "cost shape does not match weights");
  }
  check_cost(cost);
  check_weights(a, "a");
  check_weights(b, "b");
  if (!(cfg.epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");

  const double eps = cfg.epsilon;
  const Matrix scaled = -cost / eps;
  const Vector loga = log_weights(a);
  const Vector logb = log_weights(b);
  TransportResult out;

  // One log-domain sweep from g = 0 puts the rebased kernel at the right
  // scale; later sweeps run in scaling form f = fbar + eps log u,
  // g = gbar + eps log v.
  Vector fbar;
  Vector gbar;
  softmin_columns(scaled.transpose(), logb, eps, fbar);
  softmin_columns(scaled, fbar / eps + loga, eps, gbar);
  Matrix kernel = rebased_kernel(scaled, fbar, gbar, eps);
  Vector u = Vector::Ones(a.size());
  Vector v = Vector::Ones(b.size());
  int it = 1;
  bool fallback = false;
  for (;; ++it) {
    const Vector u_next = (kernel * b.cwiseProduct(v)).cwiseInverse();
    if (!usable(u_next)) {
      fallback = true;
      break;
    }
    if (scaled_violation(a, u, u_next) < cfg.tol) {
      out.converged = true;
      break;
    }
    if (it >= cfg.max_iters) break;
    u = u_next;
    v = (kernel.transpose() * a.cwiseProduct(u)).cwiseInverse();
    if (!usable(v)) {
      fallback = true;
      ++it;
      break;
    }
    if (needs_absorb(u) || needs_absorb(v)) {
      fbar += eps * u.array().log().matrix();
      gbar += eps * v.array().log().matrix();
      u.setOnes();
      v.setOnes();
      kernel = rebased_kernel(scaled, fbar, gbar, eps);
    }
  }
  Vector f = fbar + eps * u.array().log().matrix();
  Vector g;
  if (fallback) {
    softmin_columns(scaled, f / eps + loga, eps, g);
    alternating_log_loop(scaled, a, b, eps, cfg, f, g, it, out.converged);
  } else {
    g = gbar + eps * v.array().log().matrix();
  }
  out.iterations = it;
  finish(scaled, f / eps + loga, g / eps + logb, out);
  out.cost = dual_cost(a, f, b, g, eps);
  out.f = std::move(f);
  out.g = std::move(g);
  return out;
}

TransportResult entropic_ot(const EmpiricalMeasure& alpha,
                            const EmpiricalMeasure& beta,
                            const SinkhornConfig& cfg) {
  return sinkhorn(alpha.weights, beta.weights,
                  pairwise_sq_dists(alpha.points, beta.points), cfg);
}

double sinkhorn_divergence(const EmpiricalMeasure& alpha,
                           const EmpiricalMeasure& beta,
                           const SinkhornConfig& cfg) {
  const auto cross = entropic_ot(alpha, beta, cfg);
  const auto self_a = sinkhorn_symmetric(
      alpha.weights, pairwise_sq_dists(alpha.points, alpha.points), cfg);
  const auto self_b = sinkhorn_symmetric(
      beta.weights, pairwise_sq_dists(beta.points, beta.points), cfg);
  return cross.cost - 0.5 * (self_a.cost + self_b.cost);
}

DivergenceGradient grad_divergence_points(const Matrix& first,
                                          const Matrix& second,
                                          const SinkhornConfig& cfg,
                                          const Mask* observed_first,
                                          const Mask* observed_second) {
  const EmpiricalMeasure alpha(first);
  const EmpiricalMeasure beta(second);
  const auto cross = entropic_ot(alpha, beta, cfg);
  const auto self_a =
      sinkhorn_symmetric(alpha.weights, pairwise_sq_dists(first, first), cfg);
  const auto self_b =
      sinkhorn_symmetric(beta.weights, pairwise_sq_dists(second, second), cfg);

  DivergenceGradient out;
  out.value = cross.cost - 0.5 * (self_a.cost + self_b.cost);
  out.converged = cross.converged && self_a.converged && self_b.converged;
  out.iterations = cross.iterations + self_a.iterations + self_b.iterations;
  out.grad_first = Matrix::Zero(first.rows(), first.cols());
  out.grad_second = Matrix::Zero(second.rows(), second.cols());
  add_cross_grad(cross.plan, first, second, 2.0, out.grad_first, out.grad_second);
  // Self terms: x appears on both sides of OT(alpha, alpha); weight -1/2 * 2.
  add_cross_grad(self_a.plan, first, first, -1.0, out.grad_first, out.grad_first);
  add_cross_grad(self_b.plan, second, second, -1.0, out.grad_second, out.grad_second);

  if (observed_first) {
    out.grad_first = observed_first->cast<bool>().select(0.0, out.grad_first);
  }
  if (observed_second) {
    out.grad_second = observed_second->cast<bool>().select(0.0, out.grad_second);
  }
  return out;
}

double median_heuristic_epsilon(const Matrix& data, double fraction) {
  constexpr Index kMaxRows = 1000;
  constexpr double kFloor = 1e-6;
  const Index n = data.rows();
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "median heuristic needs >= 2 rows");
  IndexList rows;
  if (n <= kMaxRows) {
    for (Index i = 0; i < n; ++i) rows.push_back(i);
  } else {
    for (Index k = 0; k < kMaxRows; ++k) rows.push_back(k * n / kMaxRows);
  }
  const Matrix sub = gather_rows(data, rows);
  const Matrix d2 = pairwise_sq_dists(sub, sub);
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(sub.rows() * (sub.rows() - 1) / 2));
  for (Index j = 1; j < sub.rows(); ++j)
    for (Index i = 0; i < j; ++i) dists.push_back(d2(i, j));
  const auto mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return std::max(fraction * median, kFloor);
}

double resolve_epsilon(const SinkhornConfig& cfg, const Matrix& data) {
  cfg.validate();
  if (cfg.rule == EpsilonRule::Absolute) return cfg.epsilon;
  return median_heuristic_epsilon(data, cfg.median_fraction);
}

double exact_w2(const Matrix& a, const Matrix& b, Index cap) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorKind::SizeMismatch,
                "exact W2 needs equal cardinalities, got " + std::to_string(a.rows()) +
                    " and " + std::to_string(b.rows()));
  }
  if (a.rows() == 0) throw Error(ErrorKind::InvalidArgument, "exact W2 of empty sets");
  if (a.rows() > cap) {
    throw Error(ErrorKind::TooLarge,
                std::to_string(a.rows()) + " points exceed the cap of " +
                    std::to_string(cap) + "; evaluate on a random subsample");
  }
  const Matrix cost = pairwise_sq_dists(a, b);
  return solve_assignment(cost).cost / static_cast<double>(a.rows());
}

void write_transport_csv(const std::string& prefix, const TransportResult& result) {
  write_csv(prefix + "_plan.csv", result.plan, default_header(result.plan.cols()));
  std::ofstream out(prefix + "_potentials.csv");
  if (!out) throw Error(ErrorKind::Io, "cannot write " + prefix + "_potentials.csv");
  out.precision(17);
  out << "side,index,value\n";
  for (Index i = 0; i < result.f.size(); ++i) out << "f," << i << ',' << result.f(i) << '\n';
  for (Index j = 0; j < result.g.size(); ++j) out << "g," << j << ',' << result.g(j) << '\n';
}

}  // namespace otimpute
