#pragma once

#include <functional>

#include "otimpute/types.hpp"

namespace otimpute {

struct RmsPropConfig {
  double step_size = 1e-2;
  double decay = 0.9;
  double guard = 1e-8;
};

/// v <- rho v + (1 - rho) g^2;  p <- p - alpha g / (sqrt(v) + delta)
class RmsProp {
 public:
  RmsProp(Index size, RmsPropConfig cfg = {});

  void step(Eigen::Ref<Vector> params, const Vector& grads);

  const Vector& second_moment() const noexcept { return v_; }
  long steps() const noexcept { return t_; }
  const RmsPropConfig& config() const noexcept { return cfg_; }

 private:
  RmsPropConfig cfg_;
  Vector v_;
  long t_ = 0;
};

struct AdamConfig {
  double step_size = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double guard = 1e-8;
  /// Coupled L2 penalty: weight_decay * p is added to the gradient.
  double weight_decay = 0.0;
};

/// Bias-corrected Adam.
class Adam {
 public:
  Adam(Index size, AdamConfig cfg = {});

  void step(Eigen::Ref<Vector> params, const Vector& grads);

  const Vector& first_moment() const noexcept { return m_; }
  const Vector& second_moment() const noexcept { return v_; }
  long steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

 private:
  AdamConfig cfg_;
  Vector m_;
  Vector v_;
  long t_ = 0;
};

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every i.
Vector finite_diff_grad(const std::function<double(const Vector&)>& f,
                        const Vector& x, double h = 1e-5);

}  // namespace otimpute
