#pragma once

#include <string_view>
#include <variant>

#include "otimpute/types.hpp"

namespace otimpute {

/// Predicts one column as an affine function of the d-1 others.
struct LinearColumnParams {
  Vector weights;
  double bias = 0.0;
};

/// (d-1) -> 2(d-1) -> ReLU -> (d-1) -> ReLU -> 1. Weight matrices are stored
/// output-major: w1 is 2(d-1) x (d-1), w2 is (d-1) x 2(d-1).
struct MlpColumnParams {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  Vector w3;
  double b3 = 0.0;

  Index input_width() const noexcept { return w1.cols(); }
};

enum class ModelKind { Linear, Mlp };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);

using ColumnParams = std::variant<LinearColumnParams, MlpColumnParams>;

/// Zero weights; the bias carries the column mean.
LinearColumnParams make_linear(Index inputs, double bias);
/// He-uniform hidden layers, zero biases, zero output weights so the network
/// starts by predicting `bias`.
MlpColumnParams make_mlp(Index inputs, double bias, Rng& rng);

Index input_width(const ColumnParams& params);
Index parameter_count(const ColumnParams& params);
/// Flat layout (MLP): w1, b1, w2, b2, w3, b3, matrices column-major.
Vector flatten(const ColumnParams& params);
void assign_flat(ColumnParams& params, const Vector& flat);
bool all_finite(const ColumnParams& params);

/// Predictions for each row of `inputs` (B x (d-1)).
Vector predict(const ColumnParams& params, const Matrix& inputs);

struct BackwardPass {
  Vector outputs;
  /// Gradient of sum_b upstream_b * output_b, flat layout.
  Vector param_grads;
  Matrix input_grads;
};

BackwardPass linear_forward_backward(const LinearColumnParams& params,
                                     const Matrix& inputs, const Vector& upstream);

/// ReLU subgradient at 0 is taken as 0.
BackwardPass mlp_forward_backward(const MlpColumnParams& params,
                                  const Matrix& inputs, const Vector& upstream);

BackwardPass forward_backward(const ColumnParams& params, const Matrix& inputs,
                              const Vector& upstream);

/// Rows of `x` at `rows` with column `drop` removed.
Matrix feature_rows(const Matrix& x, const IndexList& rows, Index drop);
/// All rows of `x` without column `drop`.
Matrix drop_column(const Matrix& x, Index drop);

}  // namespace otimpute
