#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace otimpute {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
/// 1 = observed, 0 = missing.
using Mask = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;
using Rng = std::mt19937_64;

}  // namespace otimpute
