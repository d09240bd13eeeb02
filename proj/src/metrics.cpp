#include "otimpute/metrics.hpp"

#include <cmath>

#include "otimpute/data.hpp"
#include "otimpute/error.hpp"
#include "otimpute/ot.hpp"

namespace otimpute {

namespace {

void check_shapes(const Matrix& truth, const Matrix& imputed, const Mask& mask) {
  if (truth.rows() != imputed.rows() || truth.cols() != imputed.cols() ||
      truth.rows() != mask.rows() || truth.cols() != mask.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "metric inputs must share one shape");
  }
}

IndexList incomplete_rows(const Mask& mask) {
  IndexList rows;
  for (Index i = 0; i < mask.rows(); ++i)
    if ((mask.row(i).array() == 0).any()) rows.push_back(i);
  return rows;
}

template <typename F>
double mean_over_missing(const Matrix& truth, const Matrix& imputed,
                         const Mask& mask, F&& term) {
  check_shapes(truth, imputed, mask);
  double sum = 0.0;
  Index count = 0;
  for (Index j = 0; j < mask.cols(); ++j) {
    for (Index i = 0; i < mask.rows(); ++i) {
      if (mask(i, j) == 0) {
        sum += term(truth(i, j) - imputed(i, j));
        ++count;
      }
    }
  }
  if (count == 0) throw Error(ErrorKind::NoMissingEntries, "mask has no missing entry");
  return sum / static_cast<double>(count);
}

}  // namespace

double mae(const Matrix& truth, const Matrix& imputed, const Mask& mask) {
  return mean_over_missing(truth, imputed, mask, [](double e) { return std::abs(e); });
}

double rmse(const Matrix& truth, const Matrix& imputed, const Mask& mask) {
  return std::sqrt(
      mean_over_missing(truth, imputed, mask, [](double e) { return e * e; }));
}

double w2_metric(const Matrix& truth, const Matrix& imputed, const Mask& mask,
                 Index cap) {
  check_shapes(truth, imputed, mask);
  const IndexList rows = incomplete_rows(mask);
  if (rows.empty()) throw Error(ErrorKind::NoMissingEntries, "mask has no missing entry");
  return exact_w2(gather_rows(imputed, rows), gather_rows(truth, rows), cap);
}

MetricReport evaluate(const Matrix& truth, const Matrix& imputed, const Mask& mask,
                      Index cap) {
  MetricReport report;
  report.mae = mae(truth, imputed, mask);
  report.rmse = rmse(truth, imputed, mask);
  report.m0 = mask.size() - mask.cast<Index>().sum();
  report.m1 = static_cast<Index>(incomplete_rows(mask).size());
  if (report.m1 > cap) {
    report.w2_skipped = true;
    report.w2_skip_reason = std::to_string(report.m1) +
                            " incomplete rows exceed the exact-W2 cap of " +
                            std::to_string(cap);
    report.w2 = std::nan("");
  } else {
    report.w2 = w2_metric(truth, imputed, mask, cap);
  }
  return report;
}

}  // namespace otimpute
