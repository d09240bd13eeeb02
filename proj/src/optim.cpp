#include "otimpute/optim.hpp"

#include <cmath>

#include "otimpute/error.hpp"

namespace otimpute {

namespace {

void check_shapes(Index params, Index grads, Index state) {
  if (params != grads || params != state) {
    throw Error(ErrorKind::DimensionMismatch,
                "optimizer expected " + std::to_string(state) + " parameters, got " +
                    std::to_string(params) + " params / " + std::to_string(grads) +
                    " grads");
  }
}

}  // namespace

RmsProp::RmsProp(Index size, RmsPropConfig cfg)
    : cfg_(cfg), v_(Vector::Zero(size)) {}

void RmsProp::step(Eigen::Ref<Vector> params, const Vector& grads) {
  check_shapes(params.size(), grads.size(), v_.size());
  v_ = cfg_.decay * v_ + (1.0 - cfg_.decay) * grads.cwiseAbs2();
  params.array() -= cfg_.step_size * grads.array() / (v_.array().sqrt() + cfg_.guard);
  ++t_;
}

Adam::Adam(Index size, AdamConfig cfg)
    : cfg_(cfg), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void Adam::step(Eigen::Ref<Vector> params, const Vector& grads) {
  check_shapes(params.size(), grads.size(), m_.size());
  Vector g = grads;
  if (cfg_.weight_decay != 0.0) g += cfg_.weight_decay * params;
  ++t_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * g;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * g.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  params.array() -=
      cfg_.step_size * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.guard);
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& f,
                        const Vector& x, double h) {
  if (!(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "step h must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double up = f(probe);
    probe(i) = x(i) - h;
    const double down = f(probe);
    probe(i) = x(i);
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

}  // namespace otimpute
