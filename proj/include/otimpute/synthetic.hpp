#pragma once

#include <string_view>

#include "otimpute/types.hpp"

namespace otimpute {

/// Two interleaved half circles with Gaussian jitter.
Matrix make_half_moons(Index n, double noise, Rng& rng);
/// Planar S curve: (sin t, sign(t)(cos t - 1)) for t uniform on [-3pi/2, 3pi/2].
Matrix make_s_shape(Index n, double noise, Rng& rng);
/// Two concentric circles, the inner one scaled by `factor`.
Matrix make_circles(Index n, double noise, double factor, Rng& rng);

/// Zero-mean Gaussian, unit variances, all pairwise correlations `rho`.
Matrix make_equicorrelated_gaussian(Index n, Index d, double rho, Rng& rng);

/// U V^T + noise * E with U, V, E standard Gaussian.
Matrix make_low_rank(Index n, Index d, Index rank, double noise, Rng& rng);

/// Gaussian free columns followed by exact linear combinations of them:
/// X = [Z, Z B] with B of shape free x dependent.
Matrix make_linear_relations(Index n, const Matrix& coefficients, Rng& rng);

/// Named generator for the CLI and configs: half_moons, s_shape, circles,
/// gaussian (equicorrelated, rho 0.5), low_rank (rank 2, noise 0.01).
Matrix make_synthetic(std::string_view name, Index n, Index d, Rng& rng);

}  // namespace otimpute
