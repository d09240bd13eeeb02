#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "otimpute/error.hpp"
#include "otimpute/imputers.hpp"
#include "validation.hpp"

namespace otimpute {

namespace {

/// Batch rows missing on `column`, with their positions inside the batch.
struct MissingInBatch {
  IndexList rows;
  IndexList slots;
};

MissingInBatch missing_in(const IndexList& batch, const Mask& mask, Index column) {
  MissingInBatch out;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    if (!mask(batch[k], column)) {
      out.rows.push_back(batch[k]);
      out.slots.push_back(static_cast<Index>(k));
    }
  }
  return out;
}

/// Overwrites column `column` of the batch with fresh predictions.
void reimpute(Matrix& batch, const MissingInBatch& miss, const Vector& predicted,
              Index offset, Index column) {
  for (std::size_t k = 0; k < miss.slots.size(); ++k)
    batch(miss.slots[k], column) = predicted(offset + static_cast<Index>(k));
}

}  // namespace

IndexList visit_order(const Mask& mask) {
  std::vector<Index> missing(static_cast<std::size_t>(mask.cols()));
  for (Index j = 0; j < mask.cols(); ++j)
    missing[static_cast<std::size_t>(j)] = mask.rows() - mask.col(j).cast<Index>().sum();
  IndexList order(static_cast<std::size_t>(mask.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return missing[static_cast<std::size_t>(a)] < missing[static_cast<std::size_t>(b)];
  });
  return order;
}

void impute_column(const ColumnParams& params, const Mask& mask, Index column,
                   Matrix& data) {
  IndexList rows;
  for (Index i = 0; i < data.rows(); ++i)
    if (!mask(i, column)) rows.push_back(i);
  if (rows.empty()) return;
  const Vector predicted = predict(params, feature_rows(data, rows, column));
  for (std::size_t k = 0; k < rows.size(); ++k)
    data(rows[k], column) = predicted(static_cast<Index>(k));
}

RoundRobinFit rr_fit(const IncompleteMatrix& x, const RoundRobinConfig& cfg) {
  const Index d = x.cols();
  if (d < 2) throw Error(ErrorKind::InvalidArgument, "round robin needs at least two columns");
  if (cfg.cycles < 1 || cfg.inner_steps < 1 || cfg.n_pairs < 1) {
    throw Error(ErrorKind::InvalidArgument, "cycles, inner_steps and n_pairs must be >= 1");
  }
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
  Rng model_rng(detail::derive_seed(cfg.seed, 2));
  ImputationState state = initialize_imputation(train, cfg.eta, init_rng);
  const Mask& mask = state.mask;

  SinkhornConfig scfg = cfg.sinkhorn;
  scfg.epsilon = resolve_epsilon(scfg, state.data);
  scfg.rule = EpsilonRule::Absolute;

  RoundRobinFit fit;
  RoundRobinModel& model = fit.model;
  model.kind = cfg.kind;
  model.means = state.means;
  model.order = visit_order(mask);
  model.cycles = cfg.cycles;
  model.epsilon = scfg.epsilon;
  std::vector<Adam> optimizers;
  for (Index j = 0; j < d; ++j) {
    if (cfg.kind == ModelKind::Linear) {
      model.params.emplace_back(make_linear(d - 1, state.means(j)));
    } else {
      model.params.emplace_back(make_mlp(d - 1, state.means(j), model_rng));
    }
    optimizers.emplace_back(parameter_count(model.params.back()), cfg.optimizer);
  }

  if (train.missing_count() == 0) {
    holdout.restore(state.data);
    fit.imputed = std::move(state.data);
    return fit;
  }

  for (int cycle = 0; cycle < cfg.cycles; ++cycle) {
    double cycle_loss = 0.0;
    int cycle_steps = 0;
    for (Index j : model.order) {
      if (train.missing_count(j) == 0) continue;
      ColumnParams& theta = model.params[static_cast<std::size_t>(j)];
      Adam& adam = optimizers[static_cast<std::size_t>(j)];
      Vector flat = flatten(theta);

      for (int step = 0; step < cfg.inner_steps; ++step) {
        Vector grad = Vector::Zero(flat.size());
        double loss = 0.0;
        bool converged = true;
        for (int p = 0; p < cfg.n_pairs; ++p) {
          std::optional<BatchPair> pair;
          if (cfg.mcar) pair = sample_batch_pair_stratified(mask, m, j, batch_rng);
          if (!pair) pair = sample_batch_pair(n, m, batch_rng);

          const MissingInBatch miss_k = missing_in(pair->first, mask, j);
          const MissingInBatch miss_l = missing_in(pair->second, mask, j);
          IndexList rows = miss_k.rows;
          rows.insert(rows.end(), miss_l.rows.begin(), miss_l.rows.end());
          const Matrix features = feature_rows(state.data, rows, j);
          const Vector predicted = predict(theta, features);

          Matrix xk = gather_rows(state.data, pair->first);
          Matrix xl = gather_rows(state.data, pair->second);
          const auto nk = static_cast<Index>(miss_k.rows.size());
          reimpute(xk, miss_k, predicted, 0, j);
          reimpute(xl, miss_l, predicted, nk, j);

          const DivergenceGradient dg = grad_divergence_points(xk, xl, scfg);
          loss += dg.value;
          converged = converged && dg.converged;
          if (rows.empty()) continue;

          Vector upstream(static_cast<Index>(rows.size()));
          for (std::size_t k = 0; k < miss_k.slots.size(); ++k)
            upstream(static_cast<Index>(k)) = dg.grad_first(miss_k.slots[k], j);
          for (std::size_t k = 0; k < miss_l.slots.size(); ++k)
            upstream(nk + static_cast<Index>(k)) = dg.grad_second(miss_l.slots[k], j);
          grad += forward_backward(theta, features, upstream).param_grads;
        }
        loss /= cfg.n_pairs;
        if (!std::isfinite(loss)) {
          throw Error(ErrorKind::Diverged,
                      "batch loss is " + std::to_string(loss) + " in cycle " +
                          std::to_string(cycle) + ", column " + std::to_string(j));
        }
        if (!converged) ++fit.nonconverged_steps;
        cycle_loss += loss;
        ++cycle_steps;

        adam.step(flat, grad / cfg.n_pairs);
        assign_flat(theta, flat);
        if (!all_finite(theta)) {
          throw Error(ErrorKind::Diverged, "non-finite parameters for column " +
                                               std::to_string(j) + " in cycle " +
                                               std::to_string(cycle));
        }
      }
      impute_column(theta, mask, j, state.data);
    }
    fit.cycle_losses.push_back(cycle_steps > 0 ? cycle_loss / cycle_steps : 0.0);
    if (holdout.enabled()) fit.validation.push_back(holdout.score(cycle + 1, state.data));
  }

  holdout.restore(state.data);
  fit.imputed = std::move(state.data);
  return fit;
}

Matrix rr_transform(const RoundRobinModel& model, const IncompleteMatrix& x_new) {
  if (x_new.cols() != model.dim() ||
      static_cast<Index>(model.params.size()) != model.dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "model expects " + std::to_string(model.dim()) + " columns, data has " +
                    std::to_string(x_new.cols()));
  }
  Matrix data = fill_with(x_new, model.means);
  for (int cycle = 0; cycle < model.cycles; ++cycle)
    for (Index j : model.order)
      impute_column(model.params[static_cast<std::size_t>(j)], x_new.mask(), j, data);
  return data;
}

}  // namespace otimpute
