#pragma once

#include "qmoments/algebra.hpp"
#include "qmoments/wick.hpp"

#include <random>

namespace qmoments {

using Rng = std::mt19937_64;

/// Entries i.i.d. complex normal with E|z|^2 = 1.
Matrix random_complex_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);
Vector random_complex_vector(Eigen::Index size, Rng& rng);
Matrix random_hermitian(Eigen::Index size, Rng& rng);

/// H = (M + M~) / 2 with M complex symmetric, f = (g + g~) / 2, `jumps`
/// random jump vectors; every entry is scaled by `scale`.
QuadraticGenerator random_generator(int modes, int jumps, Rng& rng, double scale = 1.0);

/// Number-conserving Hamiltonian a^dag h a (h Hermitian) plus a squeezing
/// part of size `squeeze`; H is rescaled so its spectral norm is `norm`.
QuadraticGenerator random_passive_generator(int modes, int jumps, Rng& rng, double norm, double squeeze,
                                            double jump_scale = 0.5);

/// Valid Gaussian data: a random thermal state rotated by a random
/// Hamiltonian flow, displaced by random amplitudes.
GaussianData random_gaussian(int modes, Rng& rng, double amplitude = 0.5);

}  // namespace qmoments
