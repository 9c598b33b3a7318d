#pragma once

#include "qmoments/defaults.hpp"
#include "qmoments/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace qmoments {

// Phase-space convention: for n modes the phase vector is
// (a_1, ..., a_n, a_1^dag, ..., a_n^dag); index k < n annihilates mode k and
// index n + k creates it.

/// Index of the conjugate operator: a_k <-> a_k^dag.
inline int conjugate_index(int index, int modes) { return index < modes ? index + modes : index - modes; }

struct StructuralMatrices {
  Matrix J;  // [f^T a, a^T g] = -f^T J g
  Matrix E;  // swaps annihilation and creation blocks
};

StructuralMatrices structural_matrices(int modes);

/// g~ = E conj(g).
Vector tilde_vec(const Vector& g);
/// K~ = E conj(K) E.
Matrix tilde_mat(const Matrix& k);

/// Gamma = sum_j gamma_j gamma~_j^T. An empty list yields the zero matrix.
Matrix gamma_from_jumps(int modes, std::span<const Vector> jumps);

/// Quadratic GKSL generator data: H^ = 1/2 a^T H a + f^T a, C_j = gamma_j^T a.
/// Only Gamma enters the moment equations; the jump vectors are kept when
/// known so the Fock oracle can rebuild the C_j.
struct QuadraticGenerator {
  int modes = 0;
  Matrix H;
  Vector f;
  Matrix Gamma;
  std::vector<Vector> jumps;

  static QuadraticGenerator from_jumps(Matrix H, Vector f, std::vector<Vector> jumps);
  static QuadraticGenerator from_gamma(Matrix H, Vector f, Matrix Gamma);
  /// H = 0, f = 0, Gamma = 0.
  static QuadraticGenerator trivial(int modes);

  int phase_dim() const { return 2 * modes; }
};

struct Violation {
  std::string invariant;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string describe() const;
};

/// Checks H = H^T = H~, f = f~, Gamma~ = Gamma^T, Gamma E hermitian PSD and
/// (when jumps are present) Gamma = sum gamma_j gamma~_j^T. Tolerances are
/// relative to max(1, max-abs of the checked object).
ValidationReport validate_generator(const QuadraticGenerator& gen, double tol_struct = defaults::kTolStruct);

/// Throws ValidationError carrying the report text when the generator is invalid.
void require_valid(const QuadraticGenerator& gen, double tol_struct = defaults::kTolStruct);

}  // namespace qmoments
