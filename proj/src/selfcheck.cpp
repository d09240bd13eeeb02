#include "otimpute/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "otimpute/bench.hpp"
#include "otimpute/column_models.hpp"
#include "otimpute/imputers.hpp"
#include "otimpute/masking.hpp"
#include "otimpute/metrics.hpp"
#include "otimpute/model_io.hpp"
#include "otimpute/optim.hpp"
#include "otimpute/ot.hpp"

namespace otimpute {

namespace {

Matrix gaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

CheckResult two_point_plan(Rng& rng) {
  std::uniform_real_distribution<double> unif(0.1, 3.0);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double c = unif(rng);
    const double eps = unif(rng);
    Matrix cost(2, 2);
    cost << 0.0, c, c, 0.0;
    const Vector half = Vector::Constant(2, 0.5);
    SinkhornConfig cfg;
    cfg.epsilon = eps;
    cfg.tol = 1e-13;
    cfg.max_iters = 100000;
    const TransportResult r = sinkhorn(half, half, cost, cfg);
    const double x = 0.5 / (1.0 + std::exp(-c / eps));
    worst = std::max(worst, std::abs(r.plan(0, 0) - x));
  }
  return {"two-point plan", worst < 1e-8, "max error " + num(worst)};
}

CheckResult self_divergence(Rng& rng) {
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const EmpiricalMeasure a(gaussian(32, 3, rng));
    SinkhornConfig cfg;
    cfg.epsilon = 0.5;
    cfg.tol = 1e-12;
    cfg.max_iters = 100000;
    worst = std::max(worst, std::abs(sinkhorn_divergence(a, a, cfg)));
  }
  return {"divergence of a measure with itself", worst <= 1e-9, "max |S| " + num(worst)};
}

CheckResult divergence_gradient(Rng& rng) {
  const Matrix x = gaussian(6, 3, rng);
  const Matrix y = gaussian(5, 3, rng);
  SinkhornConfig cfg;
  cfg.epsilon = 1.0;
  cfg.tol = 1e-12;
  cfg.max_iters = 100000;
  const DivergenceGradient g = grad_divergence_points(x, y, cfg);
  const Vector flat = Eigen::Map<const Vector>(x.data(), x.size());
  const Vector fd = finite_diff_grad(
      [&](const Vector& v) {
        const Matrix pts = Eigen::Map<const Matrix>(v.data(), x.rows(), x.cols());
        return sinkhorn_divergence(EmpiricalMeasure(pts), EmpiricalMeasure(y), cfg);
      },
      flat, 1e-5);
  const Vector analytic = Eigen::Map<const Vector>(g.grad_first.data(), g.grad_first.size());
  const double rel = (analytic - fd).norm() / std::max(fd.norm(), 1e-12);
  return {"divergence gradient vs finite differences", rel < 1e-4, "relative error " + num(rel)};
}

CheckResult assignment_bruteforce(Rng& rng) {
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Matrix a = gaussian(5, 2, rng);
    const Matrix b = gaussian(5, 2, rng);
    const Matrix cost = pairwise_sq_dists(a, b);
    std::vector<int> perm = {0, 1, 2, 3, 4};
    double best = 1e300;
    do {
      double s = 0.0;
      for (int i = 0; i < 5; ++i) s += cost(i, perm[static_cast<std::size_t>(i)]);
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    worst = std::max(worst, std::abs(exact_w2(a, b) - best / 5.0));
  }
  return {"exact W2 vs permutations", worst < 1e-10, "max error " + num(worst)};
}

CheckResult mlp_gradient(Rng& rng) {
  MlpColumnParams p = make_mlp(3, 0.2, rng);
  p.w3 = gaussian(3, 1, rng).col(0);
  p.b1 = gaussian(6, 1, rng).col(0);
  const ColumnParams params = p;
  const Matrix inputs = gaussian(4, 3, rng);
  const Vector upstream = gaussian(4, 1, rng).col(0);
  const BackwardPass bp = forward_backward(params, inputs, upstream);
  const Vector fd = finite_diff_grad(
      [&](const Vector& flat) {
        ColumnParams q = params;
        assign_flat(q, flat);
        return predict(q, inputs).dot(upstream);
      },
      flatten(params), 1e-6);
  const double rel = (bp.param_grads - fd).norm() / std::max(fd.norm(), 1e-12);
  return {"MLP backward pass vs finite differences", rel < 1e-5, "relative error " + num(rel)};
}

CheckResult mcar_rate(Rng& rng) {
  const double p = 0.3;
  const Mask m = mcar_mask(200, 50, p, rng);
  const double rate = 1.0 - m.cast<double>().mean();
  const double band = 3.0 * std::sqrt(p * (1.0 - p) / 1e4);
  return {"MCAR missing rate", std::abs(rate - p) <= band, "rate " + num(rate)};
}

CheckResult observed_untouched(Rng& rng) {
  const Matrix truth = gaussian(64, 3, rng);
  const Mask mask = mcar_mask(64, 3, 0.2, rng);
  const IncompleteMatrix x(truth, mask);
  SinkhornImputerConfig cfg;
  cfg.iterations = 5;
  cfg.n_pairs = 2;
  cfg.batch_size = 16;
  const Matrix out = impute_sinkhorn_direct(x, cfg).imputed;
  bool same = true;
  for (Index j = 0; j < 3; ++j)
    for (Index i = 0; i < 64; ++i)
      if (mask(i, j) && out(i, j) != truth(i, j)) same = false;
  return {"observed entries unchanged by imputation", same && out.allFinite(), ""};
}

CheckResult model_round_trip(Rng& rng) {
  RoundRobinModel model;
  model.kind = ModelKind::Mlp;
  model.means = gaussian(3, 1, rng).col(0);
  model.order = {2, 0, 1};
  model.epsilon = 0.25;
  for (int j = 0; j < 3; ++j) model.params.emplace_back(make_mlp(2, 0.1 * j, rng));
  const RoundRobinModel back = model_from_json(model_to_json(model));
  bool same = back.kind == model.kind && back.order == model.order &&
              back.means == model.means && back.epsilon == model.epsilon;
  for (std::size_t j = 0; j < 3; ++j) same = same && flatten(back.params[j]) == flatten(model.params[j]);
  return {"model JSON round trip", same, ""};
}

CheckResult batch_rule() {
  const bool ok = resolve_batch_size(20640) == 128 && resolve_batch_size(300) == 128 &&
                  resolve_batch_size(103) == 32 && resolve_batch_size(256) == 128;
  return {"batch size rule", ok, ""};
}

}  // namespace

std::vector<CheckResult> run_self_checks(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::function<CheckResult()>> checks = {
      [&] { return two_point_plan(rng); },      [&] { return self_divergence(rng); },
      [&] { return divergence_gradient(rng); }, [&] { return assignment_bruteforce(rng); },
      [&] { return mlp_gradient(rng); },        [&] { return mcar_rate(rng); },
      [&] { return observed_untouched(rng); },  [&] { return model_round_trip(rng); },
      [] { return batch_rule(); },
  };
  std::vector<CheckResult> out;
  for (auto& check : checks) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({"(check threw)", false, e.what()});
    }
  }
  return out;
}

}  // namespace otimpute
