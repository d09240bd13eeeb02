#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "otimpute/types.hpp"

namespace otimpute {

enum class Mechanism { Mcar, MarLogistic, MnarLogistic, MnarQuantile };

std::string_view to_string(Mechanism m) noexcept;
/// Accepts `mcar`, `mar`, `mnar_logistic`, `mnar_quantile`.
Mechanism parse_mechanism(std::string_view name);

struct MaskSpec {
  Mechanism mechanism = Mechanism::Mcar;
  double rate = 0.3;
  /// Logistic inputs (MAR/MNAR-logistic) or censored columns (MNAR-quantile).
  double input_fraction = 0.3;
  double quantile = 0.25;

  /// Throws InvalidRate / InvalidArgument on out-of-range fields.
  void validate() const;
};

/// Each entry missing independently with probability p. Rows that come out
/// entirely missing are redrawn (at most 100 times each). p = 0 yields an
/// all-observed mask.
Mask mcar_mask(Index n, Index d, double p, Rng& rng);

/// ceil(input_fraction * d) random columns stay fully observed; every other
/// column is masked with probabilities sigmoid(x_inputs . w_j + b_j), where
/// w_j is Gaussian, rescaled so the linear term has unit variance, and b_j is
/// calibrated by bisection so the mean probability equals p.
Mask mar_logistic_mask(const Matrix& x, double p, double input_fraction, Rng& rng);

/// mar_logistic_mask followed by MCAR masking of the input columns at rate p.
Mask mnar_logistic_mask(const Matrix& x, double p, double input_fraction, Rng& rng);

/// In ceil(column_fraction * d) random columns, column_fraction in (0, 1],
/// entries strictly below the q-quantile or strictly above the
/// (1-q)-quantile are masked with probability p / (2q). Entries inside the
/// band are never masked.
Mask mnar_quantile_mask(const Matrix& x, double p, double q,
                        double column_fraction, Rng& rng);

Mask generate_mask(const Matrix& x, const MaskSpec& spec, Rng& rng);

/// Masks `outputs` columns with a logistic model on `inputs` columns, using
/// the given raw weights (inputs.size() x outputs.size()). Weights are
/// rescaled to unit variance of the linear term unless they are all zero.
Mask logistic_mask_with_weights(const Matrix& x, const IndexList& inputs,
                                const IndexList& outputs, const Matrix& weights,
                                double p, Rng& rng);

/// Intercept b with mean(sigmoid(z + b)) == p, by bisection on [-50, 50].
double calibrate_intercept(const Vector& z, double p);

/// Linear interpolation between order statistics; `sorted` must be ascending.
double quantile_sorted(const std::vector<double>& sorted, double q);

}  // namespace otimpute
