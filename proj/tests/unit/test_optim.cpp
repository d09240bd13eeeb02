#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

#include "otimpute/optim.hpp"

using namespace otimpute;

TEST_SUITE("optim") {

TEST_CASE("rmsprop leaves parameters alone on zero gradient") {
  RmsProp opt(3);
  Vector p(3);
  p << 1, -2, 3;
  const Vector before = p;
  for (int t = 0; t < 5; ++t) opt.step(p, Vector::Zero(3));
  CHECK(p == before);
}

TEST_CASE("rmsprop first step by hand") {
  RmsProp opt(1, RmsPropConfig{0.01, 0.9, 1e-8});
  Vector p = Vector::Zero(1);
  opt.step(p, Vector::Ones(1));
  CHECK(opt.second_moment()(0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(std::abs(p(0) - (-0.01 / (std::sqrt(0.1) + 1e-8))) < 1e-15);
  CHECK(opt.steps() == 1);
}

TEST_CASE("adam leaves parameters alone on zero gradient") {
  Adam opt(2);
  Vector p(2);
  p << 0.5, -0.5;
  for (int t = 0; t < 5; ++t) opt.step(p, Vector::Zero(2));
  CHECK(p(0) == 0.5);
  CHECK(p(1) == -0.5);
}

TEST_CASE("adam first step moves by the step size against the gradient sign") {
  for (double g : {-3.0, 0.2, 7.5}) {
    Adam opt(1, AdamConfig{0.01, 0.9, 0.999, 1e-8, 0.0});
    Vector p = Vector::Zero(1);
    opt.step(p, Vector::Constant(1, g));
    CHECK(std::abs(p(0) - (-0.01 * g / (std::abs(g) + 1e-8))) < 1e-15);
  }
}

TEST_CASE("adam on a quadratic follows the recurrence and descends") {
  const double alpha = 0.05, b1 = 0.9, b2 = 0.999, delta = 1e-8;
  Adam opt(1, AdamConfig{alpha, b1, b2, delta, 0.0});
  Vector p = Vector::Ones(1);
  double q = 1.0, m = 0.0, v = 0.0;
  double prev = 1.0;
  bool approaching = true;
  double worst_late = 0.0;
  for (int t = 1; t <= 100; ++t) {
    opt.step(p, Vector::Constant(1, 2.0 * p(0)));
    const double g = 2.0 * q;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    q -= alpha * (m / (1.0 - std::pow(b1, t))) / (std::sqrt(v / (1.0 - std::pow(b2, t))) + delta);
    CHECK(std::abs(p(0) - q) < 1e-12);
    // Strict descent until the iterate first crosses zero.
    if (approaching) {
      if (p(0) <= 0.0) {
        approaching = false;
      } else {
        CHECK(p(0) < prev);
      }
    }
    if (t > 25) worst_late = std::max(worst_late, std::abs(p(0)));
    prev = p(0);
  }
  CHECK(std::abs(p(0)) < 0.2);
  CHECK(worst_late < 0.2);
}

TEST_CASE("adam weight decay is added to the gradient") {
  Adam decayed(1, AdamConfig{0.01, 0.9, 0.999, 1e-8, 0.5});
  Adam plain(1, AdamConfig{0.01, 0.9, 0.999, 1e-8, 0.0});
  Vector p = Vector::Constant(1, 2.0);
  Vector q = Vector::Constant(1, 2.0);
  for (int t = 0; t < 10; ++t) {
    decayed.step(p, Vector::Constant(1, 0.3));
    plain.step(q, Vector::Constant(1, 0.3 + 0.5 * q(0)));
  }
  CHECK(std::abs(p(0) - q(0)) < 1e-15);
}

TEST_CASE("optimizers are deterministic") {
  auto run = [] {
    Adam opt(4);
    Vector p = Vector::LinSpaced(4, -1.0, 1.0);
    for (int t = 0; t < 50; ++t) opt.step(p, p.array().sin().matrix());
    return p;
  };
  CHECK(run() == run());
}

TEST_CASE("finite differences") {
  Vector x(2);
  x << 1, 2;
  const Vector g = finite_diff_grad([](const Vector& v) { return v.squaredNorm(); }, x, 1e-5);
  CHECK(std::abs(g(0) - 2.0) < 1e-6);
  CHECK(std::abs(g(1) - 4.0) < 1e-6);
  const Vector lin = finite_diff_grad([](const Vector& v) { return 3.0 * v(0) - 0.5 * v(1); }, x);
  CHECK(std::abs(lin(0) - 3.0) < 1e-9);
  CHECK(std::abs(lin(1) + 0.5) < 1e-9);
}

}  // TEST_SUITE
