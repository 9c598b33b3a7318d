#pragma once

#include "qmoments/algebra.hpp"
#include "qmoments/moments.hpp"

#include <span>

namespace qmoments {

/// First moments and second central moments of a (Gaussian) state. The skew
/// part of D is fixed by the commutation relations: D - D^T = -J, so
/// D = C - J/2 with the symmetric covariance C.
struct GaussianData {
  Vector mu;
  Matrix D;

  int modes() const { return static_cast<int>(mu.size() / 2); }
  Matrix covariance() const { return (D + D.transpose()) / 2.0; }

  static GaussianData vacuum(int modes);
  /// Coherent state with amplitudes alpha_k per mode (vacuum D, mu = (alpha, conj(alpha))).
  static GaussianData coherent(const Vector& alpha);
  /// Thermal product state with mean occupations nbar_k.
  static GaussianData thermal(const RealVector& nbar);
};

/// Reports D - D^T = -J and (as a separate entry) mu~ = mu violations.
ValidationReport validate_gaussian(const GaussianData& g, double tol_struct = defaults::kTolStruct);

/// sum over perfect matchings of the slots of prod D[i_a, i_b] (a < b);
/// 0 for an odd number of slots and 1 for none. `index` holds phase indices.
cplx pairing_sum_D(const Matrix& D, std::span<const int> index);

/// Isserlis-Wick moments <a_I> = sum_{I = I1 u I2} mu_{I1} D_{I2} for all orders up to m.
/// Throws ValidationError when the skew part of D violates the commutation relations.
MomentHierarchy gaussian_hierarchy(const GaussianData& g, int max_order, double tol_struct = defaults::kTolStruct);

/// Max |T_k - T_k^Wick| over orders 3..m, where the Wick tensors are built
/// from the hierarchy's own mu and D. Throws std::invalid_argument when m < 3.
double gaussianity_residual(const MomentHierarchy& h);

}  // namespace qmoments
