#pragma once

#include "qmoments/combinatorics.hpp"
#include "qmoments/defaults.hpp"
#include "qmoments/propagators.hpp"
#include "qmoments/types.hpp"

#include <span>
#include <vector>

namespace qmoments {

/// Ordered moment tensors <a_{i_1} ... a_{i_k}> for k = 0..m over the 2n phase
/// indices. Tensors are dense and row-major: slot 0 is the most significant
/// digit of the flat index. T_0 is the scalar 1 for hierarchies that come
/// from a state.
class MomentHierarchy {
 public:
  MomentHierarchy(int modes, int max_order);

  int modes() const { return modes_; }
  int max_order() const { return max_order_; }
  int phase_dim() const { return 2 * modes_; }

  Vector& tensor(int order) { return tensors_.at(static_cast<std::size_t>(order)); }
  const Vector& tensor(int order) const { return tensors_.at(static_cast<std::size_t>(order)); }

  cplx& operator()(std::span<const int> index);
  cplx operator()(std::span<const int> index) const;

  Vector first_moments() const;
  /// T_2 arranged as a matrix (row index = slot 0).
  Matrix second_moments() const;

  /// Concatenation of T_0, ..., T_m.
  Vector stacked() const;
  static MomentHierarchy from_stacked(int modes, int max_order, const Vector& stacked);
  /// Offset of order k inside the stacked vector.
  Eigen::Index stacked_offset(int order) const;
  Eigen::Index stacked_size() const { return stacked_offset(max_order_ + 1); }

  /// Copy truncated to a lower maximum order.
  MomentHierarchy truncated(int max_order) const;

 private:
  int modes_;
  int max_order_;
  std::vector<Vector> tensors_;
};

/// Number of entries of an order-k tensor: (2n)^k.
Eigen::Index tensor_size(int phase_dim, int order);
/// Phase indices of each slot for a flat row-major position.
void decode_index(Eigen::Index flat, int phase_dim, int order, std::span<int> digits);
Eigen::Index encode_index(std::span<const int> digits, int phase_dim);

/// Applies `m` to one slot of an order-k tensor.
Vector apply_to_slot(const Matrix& m, const Vector& tensor, int order, int slot);
/// Applies `m` to every slot of every order (G_I acting on each a_I).
MomentHierarchy apply_slotwise(const Matrix& m, const MomentHierarchy& h);

/// Derivative of every order under the Heisenberg equations with drift (B, phi, Xi):
/// slot-sum of B, phi inserted at each slot times T_{k-1}, Xi inserted at each
/// ascending slot pair times T_{k-2}. The order-0 derivative is zero.
MomentHierarchy heisenberg_rhs(const MomentHierarchy& h, const DriftData& drift);

/// Tensors W_j = sum over drive/pairing splittings of {0..j-1} of
/// prod psi[drive slots] * prod beta[pair slots], j = 0..max_order.
std::vector<Vector> drive_noise_tensors(const Vector& psi, const Matrix& beta, int max_order);

/// sum over partition terms (I1, I2, I3) of psi_{I1} beta_{I2} T_{I3}, slot
/// placement preserved; the G_I factor is not applied. With
/// `exclude_full_initial` the I3 = I summand is dropped.
MomentHierarchy partition_sum(const MomentHierarchy& initial, const Vector& psi, const Matrix& beta,
                              bool exclude_full_initial = false);

/// Closed-form solution of the Heisenberg equations at grid time t of the bundle.
MomentHierarchy evolve_hierarchy(const MomentHierarchy& initial, const PropagatorBundle& bundle, double t);

/// D = T_2 - mu mu^T. Throws std::invalid_argument when max order < 2.
Matrix central_second_moment(const MomentHierarchy& h);

/// Entrywise max |a - b| over orders 0..m.
double max_abs_difference(const MomentHierarchy& a, const MomentHierarchy& b);

}  // namespace qmoments
