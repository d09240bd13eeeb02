#include <algorithm>
#include <cmath>
#include <utility>

#include "otimpute/error.hpp"
#include "otimpute/imputers.hpp"
#include "validation.hpp"

namespace otimpute {

namespace {

void add_rows(Matrix& total, const IndexList& rows, const Matrix& part) {
  for (std::size_t k = 0; k < rows.size(); ++k) total.row(rows[k]) += part.row(static_cast<Index>(k));
}

Mask gather_mask(const Mask& mask, const IndexList& rows) {
  Mask out(static_cast<Index>(rows.size()), mask.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = mask.row(rows[k]);
  return out;
}

}  // namespace

SinkhornConfig imputation_sinkhorn_defaults() {
  SinkhornConfig cfg;
  cfg.rule = EpsilonRule::MedianFraction;
  cfg.median_fraction = 0.05;
  cfg.tol = 1e-4;
  cfg.max_iters = 1000;
  return cfg;
}

SinkhornImputeResult impute_sinkhorn_direct(const IncompleteMatrix& x,
                                            const SinkhornImputerConfig& cfg) {
  if (cfg.iterations < 0) throw Error(ErrorKind::InvalidArgument, "iterations must be >= 0");
  if (cfg.n_pairs < 1) throw Error(ErrorKind::InvalidArgument, "n_pairs must be >= 1");
  cfg.sinkhorn.validate();

  const detail::Holdout holdout(x, cfg.monitor);
  const IncompleteMatrix& train = holdout.training();
  const Index n = train.rows();
  const Index m = cfg.batch_size > 0 ? cfg.batch_size : resolve_batch_size(n);
  if (m > n) {
    throw Error(ErrorKind::BatchTooLarge,
                "batch size " + std::to_string(m) + " exceeds n = " + std::to_string(n));
  }

  Rng init_rng(detail::derive_seed(cfg.seed, 0));
  Rng batch_rng(detail::derive_seed(cfg.seed, 1));
  ImputationState state = initialize_imputation(train, cfg.eta, init_rng);

  SinkhornImputeResult result;
  SinkhornConfig scfg = cfg.sinkhorn;
  scfg.epsilon = resolve_epsilon(scfg, state.data);
  scfg.rule = EpsilonRule::Absolute;
  result.epsilon = scfg.epsilon;

  const Mask& mask = state.mask;
  IndexList slot_row;
  IndexList slot_col;
  for (Index j = 0; j < mask.cols(); ++j)
    for (Index i = 0; i < n; ++i)
      if (!mask(i, j)) {
        slot_row.push_back(i);
        slot_col.push_back(j);
      }
  const auto n_slots = static_cast<Index>(slot_row.size());

  if (n_slots > 0) {
    RmsProp optimizer(n_slots, cfg.optimizer);
    Vector params(n_slots);
    Vector grads(n_slots);
    Matrix total(n, train.cols());
    const int report_every =
        cfg.report_every > 0 ? cfg.report_every : std::max(1, cfg.iterations / 10);
    BatchPair last;

    for (int t = 0; t < cfg.iterations; ++t) {
      total.setZero();
      double loss = 0.0;
      bool converged = true;
      for (int p = 0; p < cfg.n_pairs; ++p) {
        BatchPair pair = sample_batch_pair(n, m, batch_rng);
        const Mask mk = gather_mask(mask, pair.first);
        const Mask ml = gather_mask(mask, pair.second);
        const DivergenceGradient dg =
            grad_divergence_points(gather_rows(state.data, pair.first),
                                   gather_rows(state.data, pair.second), scfg, &mk, &ml);
        loss += dg.value;
        converged = converged && dg.converged;
        add_rows(total, pair.first, dg.grad_first);
        add_rows(total, pair.second, dg.grad_second);
        last = std::move(pair);
      }
      loss /= cfg.n_pairs;
      if (!std::isfinite(loss)) {
        throw Error(ErrorKind::Diverged, "batch loss is " + std::to_string(loss) +
                                             " at iteration " + std::to_string(t) +
                                             " (epsilon " + std::to_string(scfg.epsilon) + ")");
      }
      if (!converged) ++result.nonconverged_steps;
      result.losses.push_back(loss);

      for (Index s = 0; s < n_slots; ++s) {
        params(s) = state.data(slot_row[s], slot_col[s]);
        grads(s) = total(slot_row[s], slot_col[s]) / cfg.n_pairs;
      }
      optimizer.step(params, grads);
      for (Index s = 0; s < n_slots; ++s) state.data(slot_row[s], slot_col[s]) = params(s);

      if (holdout.enabled() && ((t + 1) % report_every == 0 || t + 1 == cfg.iterations)) {
        result.validation.push_back(holdout.score(t + 1, state.data));
      }
    }

    if (!cfg.debug_dump_prefix.empty() && !last.first.empty()) {
      write_transport_csv(cfg.debug_dump_prefix,
                          entropic_ot(EmpiricalMeasure(gather_rows(state.data, last.first)),
                                      EmpiricalMeasure(gather_rows(state.data, last.second)),
                                      scfg));
    }
  }

  holdout.restore(state.data);
  result.imputed = std::move(state.data);
  return result;
}

}  // namespace otimpute
