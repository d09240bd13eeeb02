#include "otimpute/column_models.hpp"

#include <cmath>

#include "otimpute/error.hpp"

namespace otimpute {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_inputs(Index expected, const Matrix& inputs, const Vector* upstream) {
  if (inputs.cols() != expected) {
    throw Error(ErrorKind::DimensionMismatch,
                "imputer expects " + std::to_string(expected) + " inputs, got " +
                    std::to_string(inputs.cols()));
  }
  if (upstream && upstream->size() != inputs.rows()) {
    throw Error(ErrorKind::DimensionMismatch, "one upstream gradient per row required");
  }
}

Matrix he_uniform(Index out, Index in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix w(out, in);
  for (Index k = 0; k < w.size(); ++k) w.data()[k] = u(rng);
  return w;
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  return kind == ModelKind::Linear ? "linear" : "mlp";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "linear") return ModelKind::Linear;
  if (name == "mlp") return ModelKind::Mlp;
  throw Error(ErrorKind::InvalidConfig, "unknown model kind '" + std::string(name) + "'");
}

LinearColumnParams make_linear(Index inputs, double bias) {
  return {Vector::Zero(inputs), bias};
}

MlpColumnParams make_mlp(Index inputs, double bias, Rng& rng) {
  const Index hidden = 2 * inputs;
  MlpColumnParams p;
  p.w1 = he_uniform(hidden, inputs, rng);
  p.b1 = Vector::Zero(hidden);
  p.w2 = he_uniform(inputs, hidden, rng);
  p.b2 = Vector::Zero(inputs);
  p.w3 = Vector::Zero(inputs);
  p.b3 = bias;
  return p;
}

Index input_width(const ColumnParams& params) {
  return std::visit(overloaded{
                        [](const LinearColumnParams& p) { return p.weights.size(); },
                        [](const MlpColumnParams& p) { return p.w1.cols(); },
                    },
                    params);
}

Index parameter_count(const ColumnParams& params) {
  return std::visit(
      overloaded{
          [](const LinearColumnParams& p) { return p.weights.size() + 1; },
          [](const MlpColumnParams& p) {
            return p.w1.size() + p.b1.size() + p.w2.size() + p.b2.size() + p.w3.size() + 1;
          },
      },
      params);
}

Vector flatten(const ColumnParams& params) {
  Vector flat(parameter_count(params));
  std::visit(overloaded{
                 [&](const LinearColumnParams& p) {
                   flat << p.weights, p.bias;
                 },
                 [&](const MlpColumnParams& p) {
                   flat << p.w1.reshaped(), p.b1, p.w2.reshaped(), p.b2, p.w3, p.b3;
                 },
             },
             params);
  return flat;
}

void assign_flat(ColumnParams& params, const Vector& flat) {
  if (flat.size() != parameter_count(params)) {
    throw Error(ErrorKind::DimensionMismatch, "flat parameter vector has wrong length");
  }
  std::visit(overloaded{
                 [&](LinearColumnParams& p) {
                   const Index n = p.weights.size();
                   p.weights = flat.head(n);
                   p.bias = flat(n);
                 },
                 [&](MlpColumnParams& p) {
                   Index o = 0;
                   auto take = [&](auto& block) {
                     block.reshaped() = flat.segment(o, block.size());
                     o += block.size();
                   };
                   take(p.w1);
                   take(p.b1);
                   take(p.w2);
                   take(p.b2);
                   take(p.w3);
                   p.b3 = flat(o);
                 },
             },
             params);
}

bool all_finite(const ColumnParams& params) { return flatten(params).allFinite(); }

Vector predict(const ColumnParams& params, const Matrix& inputs) {
  return std::visit(
      overloaded{
          [&](const LinearColumnParams& p) -> Vector {
            check_inputs(p.weights.size(), inputs, nullptr);
            return (inputs * p.weights).array() + p.bias;
          },
          [&](const MlpColumnParams& p) -> Vector {
            check_inputs(p.w1.cols(), inputs, nullptr);
            const Matrix a1 =
                ((inputs * p.w1.transpose()).rowwise() + p.b1.transpose()).cwiseMax(0.0);
            const Matrix a2 =
                ((a1 * p.w2.transpose()).rowwise() + p.b2.transpose()).cwiseMax(0.0);
            return (a2 * p.w3).array() + p.b3;
          },
      },
      params);
}

BackwardPass linear_forward_backward(const LinearColumnParams& params,
                                     const Matrix& inputs, const Vector& upstream) {
  check_inputs(params.weights.size(), inputs, &upstream);
  BackwardPass out;
  out.outputs = (inputs * params.weights).array() + params.bias;
  out.param_grads.resize(params.weights.size() + 1);
  out.param_grads << inputs.transpose() * upstream, upstream.sum();
  out.input_grads = upstream * params.weights.transpose();
  return out;
}

BackwardPass mlp_forward_backward(const MlpColumnParams& p, const Matrix& inputs,
                                  const Vector& upstream) {
  check_inputs(p.w1.cols(), inputs, &upstream);
  const Matrix z1 = (inputs * p.w1.transpose()).rowwise() + p.b1.transpose();
  const Matrix a1 = z1.cwiseMax(0.0);
  const Matrix z2 = (a1 * p.w2.transpose()).rowwise() + p.b2.transpose();
  const Matrix a2 = z2.cwiseMax(0.0);

  BackwardPass out;
  out.outputs = (a2 * p.w3).array() + p.b3;

  const Vector dw3 = a2.transpose() * upstream;
  const double db3 = upstream.sum();
  const Matrix dz2 = ((upstream * p.w3.transpose()).array() * (z2.array() > 0.0).cast<double>()).matrix();
  const Matrix dw2 = dz2.transpose() * a1;
  const Vector db2 = dz2.colwise().sum().transpose();
  const Matrix dz1 = ((dz2 * p.w2).array() * (z1.array() > 0.0).cast<double>()).matrix();
  const Matrix dw1 = dz1.transpose() * inputs;
  const Vector db1 = dz1.colwise().sum().transpose();

  out.param_grads.resize(dw1.size() + db1.size() + dw2.size() + db2.size() + dw3.size() + 1);
  out.param_grads << dw1.reshaped(), db1, dw2.reshaped(), db2, dw3, db3;
  out.input_grads = dz1 * p.w1;
  return out;
}

BackwardPass forward_backward(const ColumnParams& params, const Matrix& inputs,
                              const Vector& upstream) {
  return std::visit(
      overloaded{
          [&](const LinearColumnParams& p) { return linear_forward_backward(p, inputs, upstream); },
          [&](const MlpColumnParams& p) { return mlp_forward_backward(p, inputs, upstream); },
      },
      params);
}

Matrix feature_rows(const Matrix& x, const IndexList& rows, Index drop) {
  const Index d = x.cols();
  Matrix out(static_cast<Index>(rows.size()), d - 1);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    const auto k = static_cast<Index>(r);
    out.row(k).head(drop) = x.row(i).head(drop);
    out.row(k).tail(d - 1 - drop) = x.row(i).tail(d - 1 - drop);
  }
  return out;
}

Matrix drop_column(const Matrix& x, Index drop) {
  const Index d = x.cols();
  Matrix out(x.rows(), d - 1);
  out.leftCols(drop) = x.leftCols(drop);
  out.rightCols(d - 1 - drop) = x.rightCols(d - 1 - drop);
  return out;
}

}  // namespace otimpute
