#include "otimpute/masking.hpp"

#include <algorithm>
#include <cmath>

#include "otimpute/data.hpp"
#include "otimpute/error.hpp"

namespace otimpute {

namespace {

constexpr int kMaxRedraws = 100;

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

void check_rate(double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw Error(ErrorKind::InvalidRate,
                "missing rate must lie in [0, 1), got " + std::to_string(p));
  }
}

void check_fraction(double f, bool allow_all = false) {
  if (!(f > 0.0 && (f < 1.0 || (allow_all && f == 1.0)))) {
    throw Error(ErrorKind::InvalidArgument,
                std::string("column fraction must lie in (0, 1") + (allow_all ? "]" : ")") +
                    ", got " + std::to_string(f));
  }
}

bool every_column_observed(const Mask& mask) {
  for (Index j = 0; j < mask.cols(); ++j)
    if (mask.col(j).cast<int>().sum() == 0) return false;
  return true;
}

/// Splits the columns into (inputs, outputs) with at least one of each.
std::pair<IndexList, IndexList> split_columns(Index d, double fraction, Rng& rng) {
  if (d < 2) {
    throw Error(ErrorKind::InvalidArgument,
                "logistic masking needs at least two columns");
  }
  auto n_inputs = static_cast<Index>(std::ceil(fraction * static_cast<double>(d)));
  n_inputs = std::clamp<Index>(n_inputs, 1, d - 1);
  IndexList perm = sample_without_replacement(d, d, rng);
  IndexList inputs(perm.begin(), perm.begin() + n_inputs);
  IndexList outputs(perm.begin() + n_inputs, perm.end());
  std::sort(inputs.begin(), inputs.end());
  std::sort(outputs.begin(), outputs.end());
  return {inputs, outputs};
}

Mask mar_once(const Matrix& x, double p, double input_fraction, Rng& rng,
              IndexList* inputs_out) {
  auto [inputs, outputs] = split_columns(x.cols(), input_fraction, rng);
  Matrix weights(static_cast<Index>(inputs.size()), static_cast<Index>(outputs.size()));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index c = 0; c < weights.cols(); ++c)
    for (Index r = 0; r < weights.rows(); ++r) weights(r, c) = normal(rng);
  if (inputs_out) *inputs_out = inputs;
  return logistic_mask_with_weights(x, inputs, outputs, weights, p, rng);
}

template <typename Draw>
Mask redraw_until_columns_observed(Draw&& draw) {
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    Mask mask = draw();
    if (every_column_observed(mask)) return mask;
  }
  throw Error(ErrorKind::InvalidRate,
              "could not produce a mask leaving every column observed");
}

}  // namespace

std::string_view to_string(Mechanism m) noexcept {
  switch (m) {
    case Mechanism::Mcar: return "mcar";
    case Mechanism::MarLogistic: return "mar";
    case Mechanism::MnarLogistic: return "mnar_logistic";
    case Mechanism::MnarQuantile: return "mnar_quantile";
  }
  return "unknown";
}

Mechanism parse_mechanism(std::string_view name) {
  if (name == "mcar" || name == "MCAR") return Mechanism::Mcar;
  if (name == "mar" || name == "MAR" || name == "mar_logistic") return Mechanism::MarLogistic;
  if (name == "mnar_logistic" || name == "MNAR-logistic") return Mechanism::MnarLogistic;
  if (name == "mnar_quantile" || name == "MNAR-quantile") return Mechanism::MnarQuantile;
  throw Error(ErrorKind::InvalidConfig, "unknown mechanism '" + std::string(name) + "'");
}

void MaskSpec::validate() const {
  check_rate(rate);
  check_fraction(input_fraction, mechanism == Mechanism::MnarQuantile);
  if (mechanism == Mechanism::MnarQuantile) {
    if (!(quantile > 0.0 && quantile < 0.5)) {
      throw Error(ErrorKind::InvalidArgument, "quantile must lie in (0, 0.5)");
    }
    if (rate / (2.0 * quantile) > 1.0) {
      throw Error(ErrorKind::InfeasibleRate,
                  "rate / (2 q) exceeds 1; raise the quantile");
    }
  }
}

Mask mcar_mask(Index n, Index d, double p, Rng& rng) {
  check_rate(p);
  if (p == 0.0) return Mask::Ones(n, d);
  std::bernoulli_distribution missing(p);
  return redraw_until_columns_observed([&] {
    Mask mask(n, d);
    for (Index i = 0; i < n; ++i) {
      int attempt = 0;
      do {
        if (attempt++ == kMaxRedraws) {
          throw Error(ErrorKind::InvalidRate,
                      "row " + std::to_string(i) + " stayed fully missing after " +
                          std::to_string(kMaxRedraws) + " redraws");
        }
        for (Index j = 0; j < d; ++j) mask(i, j) = missing(rng) ? 0 : 1;
      } while (mask.row(i).cast<int>().sum() == 0);
    }
    return mask;
  });
}

double calibrate_intercept(const Vector& z, double p) {
  auto mean_prob = [&](double b) {
    double s = 0.0;
    for (Index i = 0; i < z.size(); ++i) s += sigmoid(z(i) + b);
    return s / static_cast<double>(z.size());
  };
  double lo = -50.0;
  double hi = 50.0;
  if (mean_prob(lo) > p || mean_prob(hi) < p) {
    throw Error(ErrorKind::CalibrationFailure,
                "target rate " + std::to_string(p) + " not bracketed on [-50, 50]");
  }
  for (int it = 0; it < 100 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_prob(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Mask logistic_mask_with_weights(const Matrix& x, const IndexList& inputs,
                                const IndexList& outputs, const Matrix& weights,
                                double p, Rng& rng) {
  check_rate(p);
  if (weights.rows() != static_cast<Index>(inputs.size()) ||
      weights.cols() != static_cast<Index>(outputs.size())) {
    throw Error(ErrorKind::DimensionMismatch, "weights must be inputs x outputs");
  }
  const Index n = x.rows();
  Mask mask = Mask::Ones(n, x.cols());
  if (p == 0.0) return mask;
  const Matrix x_in = x(Eigen::all, inputs);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    Vector z = x_in * weights.col(static_cast<Index>(k));
    const double mean = z.mean();
    const double sd = std::sqrt((z.array() - mean).square().mean());
    if (sd > 0.0) z /= sd;
    const double b = calibrate_intercept(z, p);
    const Index j = outputs[k];
    for (Index i = 0; i < n; ++i) {
      if (unif(rng) < sigmoid(z(i) + b)) mask(i, j) = 0;
    }
  }
  return mask;
}

Mask mar_logistic_mask(const Matrix& x, double p, double input_fraction, Rng& rng) {
  check_rate(p);
  check_fraction(input_fraction);
  return redraw_until_columns_observed(
      [&] { return mar_once(x, p, input_fraction, rng, nullptr); });
}

Mask mnar_logistic_mask(const Matrix& x, double p, double input_fraction, Rng& rng) {
  check_rate(p);
  check_fraction(input_fraction);
  return redraw_until_columns_observed([&] {
    IndexList inputs;
    Mask mask = mar_once(x, p, input_fraction, rng, &inputs);
    std::bernoulli_distribution missing(p);
    for (Index j : inputs)
      for (Index i = 0; i < x.rows(); ++i)
        if (missing(rng)) mask(i, j) = 0;
    return mask;
  });
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw Error(ErrorKind::InvalidArgument, "quantile of empty set");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Mask mnar_quantile_mask(const Matrix& x, double p, double q,
                        double column_fraction, Rng& rng) {
  MaskSpec{Mechanism::MnarQuantile, p, column_fraction, q}.validate();
  const Index n = x.rows();
  const Index d = x.cols();
  const double rate = p / (2.0 * q);
  return redraw_until_columns_observed([&] {
    Mask mask = Mask::Ones(n, d);
    auto n_cols = static_cast<Index>(std::ceil(column_fraction * static_cast<double>(d)));
    n_cols = std::clamp<Index>(n_cols, 1, d);
    IndexList cols = sample_without_replacement(d, n_cols, rng);
    std::sort(cols.begin(), cols.end());
    std::bernoulli_distribution missing(rate);
    for (Index j : cols) {
      std::vector<double> sorted(x.col(j).data(), x.col(j).data() + n);
      std::sort(sorted.begin(), sorted.end());
      const double lower = quantile_sorted(sorted, q);
      const double upper = quantile_sorted(sorted, 1.0 - q);
      for (Index i = 0; i < n; ++i) {
        const double v = x(i, j);
        if ((v < lower || v > upper) && missing(rng)) mask(i, j) = 0;
      }
    }
    return mask;
  });
}

Mask generate_mask(const Matrix& x, const MaskSpec& spec, Rng& rng) {
  spec.validate();
  switch (spec.mechanism) {
    case Mechanism::Mcar: return mcar_mask(x.rows(), x.cols(), spec.rate, rng);
    case Mechanism::MarLogistic:
      return mar_logistic_mask(x, spec.rate, spec.input_fraction, rng);
    case Mechanism::MnarLogistic:
      return mnar_logistic_mask(x, spec.rate, spec.input_fraction, rng);
    case Mechanism::MnarQuantile:
      return mnar_quantile_mask(x, spec.rate, spec.quantile, spec.input_fraction, rng);
  }
  throw Error(ErrorKind::InvalidConfig, "unknown mechanism");
}

}  // namespace otimpute
