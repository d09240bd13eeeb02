#pragma once

#include <cmath>
#include <random>

#include "doctest.h"

#include "otimpute/error.hpp"
#include "otimpute/types.hpp"

namespace testing {

inline otimpute::Matrix gaussian(otimpute::Index n, otimpute::Index d, otimpute::Rng& rng) {
  std::normal_distribution<double> normal;
  otimpute::Matrix x(n, d);
  for (otimpute::Index j = 0; j < d; ++j)
    for (otimpute::Index i = 0; i < n; ++i) x(i, j) = normal(rng);
  return x;
}

/// Three standard errors of a binomial proportion.
inline double band3(double p, double trials) { return 3.0 * std::sqrt(p * (1.0 - p) / trials); }

inline double missing_rate(const otimpute::Mask& mask) {
  return 1.0 - mask.cast<double>().mean();
}

inline double missing_rate(const otimpute::Mask& mask, otimpute::Index column) {
  return 1.0 - mask.col(column).cast<double>().mean();
}

/// Kind of the otimpute::Error thrown by `fn`.
otimpute::ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const otimpute::Error& e) {
    return e.kind();
  }
  FAIL("expected an otimpute::Error");
  return otimpute::ErrorKind::Io;
}

}  // namespace testing
