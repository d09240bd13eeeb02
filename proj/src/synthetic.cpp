#include "otimpute/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "otimpute/error.hpp"

namespace otimpute {

namespace {

Matrix gaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

void add_noise(Matrix& x, double noise, Rng& rng) {
  if (noise > 0.0) x += noise * gaussian(x.rows(), x.cols(), rng);
}

}  // namespace

Matrix make_half_moons(Index n, double noise, Rng& rng) {
  const Index upper = n / 2;
  Matrix x(n, 2);
  const double pi = std::numbers::pi;
  for (Index i = 0; i < n; ++i) {
    if (i < upper) {
      const double t = pi * static_cast<double>(i) / static_cast<double>(std::max<Index>(upper - 1, 1));
      x(i, 0) = std::cos(t);
      x(i, 1) = std::sin(t);
    } else {
      const Index k = i - upper;
      const double t = pi * static_cast<double>(k) / static_cast<double>(std::max<Index>(n - upper - 1, 1));
      x(i, 0) = 1.0 - std::cos(t);
      x(i, 1) = 0.5 - std::sin(t);
    }
  }
  add_noise(x, noise, rng);
  return x;
}

Matrix make_s_shape(Index n, double noise, Rng& rng) {
  std::uniform_real_distribution<double> unif(-1.5 * std::numbers::pi, 1.5 * std::numbers::pi);
  Matrix x(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double t = unif(rng);
    x(i, 0) = std::sin(t);
    x(i, 1) = (t >= 0.0 ? 1.0 : -1.0) * (std::cos(t) - 1.0);
  }
  add_noise(x, noise, rng);
  return x;
}

Matrix make_circles(Index n, double noise, double factor, Rng& rng) {
  const Index outer = n / 2;
  Matrix x(n, 2);
  const double two_pi = 2.0 * std::numbers::pi;
  for (Index i = 0; i < n; ++i) {
    const bool is_outer = i < outer;
    const Index k = is_outer ? i : i - outer;
    const Index count = is_outer ? outer : n - outer;
    const double t = two_pi * static_cast<double>(k) / static_cast<double>(count);
    const double r = is_outer ? 1.0 : factor;
    x(i, 0) = r * std::cos(t);
    x(i, 1) = r * std::sin(t);
  }
  add_noise(x, noise, rng);
  return x;
}

Matrix make_equicorrelated_gaussian(Index n, Index d, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "equicorrelation must lie in [0, 1)");
  }
  const Matrix shared = gaussian(n, 1, rng);
  Matrix x = std::sqrt(1.0 - rho) * gaussian(n, d, rng);
  x.colwise() += std::sqrt(rho) * shared.col(0);
  return x;
}

Matrix make_low_rank(Index n, Index d, Index rank, double noise, Rng& rng) {
  const Matrix u = gaussian(n, rank, rng);
  const Matrix v = gaussian(d, rank, rng);
  Matrix x = u * v.transpose();
  add_noise(x, noise, rng);
  return x;
}

Matrix make_linear_relations(Index n, const Matrix& coefficients, Rng& rng) {
  const Matrix z = gaussian(n, coefficients.rows(), rng);
  Matrix x(n, coefficients.rows() + coefficients.cols());
  x << z, z * coefficients;
  return x;
}

Matrix make_synthetic(std::string_view name, Index n, Index d, Rng& rng) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "synthetic data needs n >= 2");
  const bool planar = name == "half_moons" || name == "s_shape" || name == "circles";
  if (planar && d != 2) {
    throw Error(ErrorKind::InvalidArgument, std::string(name) + " is two-dimensional");
  }
  if (name == "half_moons") return make_half_moons(n, 0.05, rng);
  if (name == "s_shape") return make_s_shape(n, 0.05, rng);
  if (name == "circles") return make_circles(n, 0.05, 0.5, rng);
  if (d < 2) throw Error(ErrorKind::InvalidArgument, "synthetic data needs d >= 2");
  if (name == "gaussian") return make_equicorrelated_gaussian(n, d, 0.5, rng);
  if (name == "low_rank") return make_low_rank(n, d, 2, 0.01, rng);
  throw Error(ErrorKind::InvalidArgument, "unknown synthetic dataset '" + std::string(name) + "'");
}

}  // namespace otimpute
