#include "validation.hpp"

#include <algorithm>
#include <cmath>

#include "otimpute/error.hpp"
#include "otimpute/metrics.hpp"

namespace otimpute::detail {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + (stream + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Holdout::Holdout(const IncompleteMatrix& x, const ValidationConfig& cfg)
    : source_(&x), training_(x) {
  if (cfg.fraction < 0.0 || cfg.fraction >= 1.0) {
    throw Error(ErrorKind::InvalidArgument, "validation fraction must lie in [0, 1)");
  }
  if (cfg.fraction == 0.0) return;
  Rng rng(cfg.seed);
  Mask mask = x.mask();
  for (Index j = 0; j < x.cols(); ++j) {
    IndexList seen;
    for (Index i = 0; i < x.rows(); ++i)
      if (x.observed(i, j)) seen.push_back(i);
    const auto count = static_cast<Index>(seen.size());
    const Index take = std::min(
        count - 1, static_cast<Index>(std::floor(cfg.fraction * static_cast<double>(count))));
    if (take <= 0) continue;
    for (Index k : sample_without_replacement(count, take, rng)) {
      const Index i = seen[static_cast<std::size_t>(k)];
      mask(i, j) = 0;
      rows_.push_back(i);
      cols_.push_back(j);
    }
  }
  training_ = IncompleteMatrix(x.values(), mask, x.column_names());
}

ValidationRecord Holdout::score(int step, const Matrix& imputed) const {
  Mask hidden = Mask::Ones(imputed.rows(), imputed.cols());
  Matrix truth = imputed;
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    hidden(rows_[k], cols_[k]) = 0;
    truth(rows_[k], cols_[k]) = source_->values()(rows_[k], cols_[k]);
  }
  const MetricReport report = evaluate(truth, imputed, hidden);
  return {step, report.mae, report.rmse, report.w2};
}

void Holdout::restore(Matrix& imputed) const {
  for (std::size_t k = 0; k < rows_.size(); ++k)
    imputed(rows_[k], cols_[k]) = source_->values()(rows_[k], cols_[k]);
}

}  // namespace otimpute::detail
