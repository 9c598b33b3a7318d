#pragma once

#include "qmoments/algebra.hpp"
#include "qmoments/defaults.hpp"
#include "qmoments/linalg.hpp"
#include "qmoments/moments.hpp"

#include <Eigen/SparseCore>

#include <span>
#include <vector>

namespace qmoments {

using SparseMatrix = Eigen::SparseMatrix<cplx>;

/// Truncated Fock space: levels 0..cutoff-1 per mode, mode 0 is the most
/// significant tensor factor.
struct FockConfig {
  int modes = 1;
  int cutoff = 2;

  long dimension() const;
  /// Throws DimensionError for non-positive sizes, BudgetError when the
  /// dimension exceeds `max_dimension`.
  void check(long max_dimension = defaults::kMaxFockDimension) const;
};

/// Ladder matrices in phase order (a_1..a_n, a_1^dag..a_n^dag) plus the
/// Hamiltonian and jump operators of a quadratic generator.
struct OperatorSet {
  FockConfig config;
  std::vector<SparseMatrix> ladder;
  SparseMatrix H;
  std::vector<SparseMatrix> jumps;
  std::vector<SparseMatrix> jumps_adjoint;
  SparseMatrix damping;  // sum_j C_j^dag C_j

  int dimension() const { return static_cast<int>(H.rows()); }
  std::vector<Matrix> dense_jumps() const;
};

/// Truncated annihilator of one mode: sqrt(k) on the superdiagonal.
Matrix annihilator(int cutoff);

/// H^ = 1/2 sum H_kl a_k a_l + sum f_k a_k and C_j = gamma_j^T a. Without jump
/// vectors the C_j come from the eigen-decomposition of Gamma E = sum gamma gamma^dag.
OperatorSet build_operators(const QuadraticGenerator& gen, const FockConfig& cfg);

/// Schroedinger generator -i[H, rho] + sum (C rho C^dag - 1/2 {C^dag C, rho}).
Matrix lindblad_rhs(const Matrix& rho, const OperatorSet& ops);
Matrix lindblad_generator(const Matrix& H, std::span<const Matrix> jumps, const Matrix& rho);
/// Heisenberg generator i[H, X] + 1/2 sum ([C^dag, X] C + C^dag [X, C]).
Matrix heisenberg_generator(const Matrix& H, std::span<const Matrix> jumps, const Matrix& X);

/// Populations of the two highest levels, maximized over modes.
double leakage(const Matrix& rho, const FockConfig& cfg);

/// Throws ValidationError unless rho is Hermitian and has unit trace (1e-10)
/// and eigenvalues >= -1e-9.
void validate_state(const Matrix& rho);

struct MasterTrajectory {
  std::vector<Matrix> states;
  double max_trace_drift = 0.0;  // largest |tr rho(t_i) - tr rho(t_{i-1})|
  double max_leakage = 0.0;
  bool leakage_exceeded = false;  // max_leakage above kLeakageThreshold
};

struct OperatorSegment {
  double duration = 0.0;  // the last segment extends to infinity
  OperatorSet ops;
};

/// Adaptive Dormand-Prince integration of the master equation on a grid.
MasterTrajectory integrate_master(const Matrix& rho0, const OperatorSet& ops, std::span<const double> times,
                                  double tol = defaults::kTolOde);
/// Same with piecewise-constant generators; segment boundaries are hit exactly.
MasterTrajectory integrate_master(const Matrix& rho0, std::span<const OperatorSegment> segments,
                                  std::span<const double> times, double tol = defaults::kTolOde);

/// Column-stacked superoperator of the Schroedinger generator: vec(L(rho)) = S vec(rho).
/// Throws BudgetError when the dimension exceeds kMaxSuperopDimension.
Matrix lindblad_superoperator(const OperatorSet& ops);
/// Superoperator-exponential trajectory rho(t) = e^{S t} rho0.
MasterTrajectory evolve_master_exact(const Matrix& rho0, const OperatorSet& ops, std::span<const double> times);

/// Phi = e^{S s}: the channel of one jump of duration s.
Matrix poisson_jump_map(const OperatorSet& ops, double duration = 1.0);
/// Smallest eigenvalue of the (Hermitian part of the) Choi matrix of a column-stacked map.
double choi_min_eigenvalue(const Matrix& phi, int dimension);
/// Solves d rho/dt = sum_j rate_j (Phi_j(rho) - rho).
MasterTrajectory integrate_poisson_master(const Matrix& rho0, std::span<const Matrix> maps,
                                          std::span<const double> rates, std::span<const double> times,
                                          const FockConfig& cfg);

/// T_k = tr(a_{i_1} ... a_{i_k} rho) for k = 0..m.
MomentHierarchy extract_moments(const Matrix& rho, const OperatorSet& ops, int max_order);

struct LeibnizReport {
  double residual = 0.0;  // max-abs of the identity's defect
  double scale = 0.0;     // max-abs over the individual terms
  double relative() const { return residual / std::max(scale, 1e-300); }
};

/// Compares L*(X_1 ... X_m) with sum_k X_1..L*(X_k)..X_m plus
/// sum_{k<l} sum_j X_1..[C_j^dag, X_k]..[X_l, C_j]..X_m.
LeibnizReport leibniz_check(const Matrix& H, std::span<const Matrix> jumps, std::span<const Matrix> factors);
double leibniz_residual(const Matrix& H, std::span<const Matrix> jumps, std::span<const Matrix> factors);

// Initial states as density matrices (product over modes).
Matrix vacuum_state(const FockConfig& cfg);
Matrix coherent_state(const FockConfig& cfg, const Vector& alpha);  // renormalized after truncation
Matrix number_state(const FockConfig& cfg, std::span<const int> occupation);
Matrix thermal_state(const FockConfig& cfg, const RealVector& nbar);  // renormalized after truncation

/// Reruns `run(cutoff)` with doubled cutoffs while its result reports leakage,
/// stopping at kMaxCutoff or at the dimension budget. Returns the last result
/// and the cutoff used.
template <class Run>
auto with_leakage_control(int modes, int cutoff, Run run, long max_dimension = defaults::kMaxFockDimension) {
  for (;;) {
    auto result = run(cutoff);
    const int next = cutoff * 2;
    FockConfig probe{modes, next};
    if (!result.leakage_exceeded || next > defaults::kMaxCutoff || probe.dimension() > max_dimension) {
      return std::pair{std::move(result), cutoff};
    }
    cutoff = next;
  }
}

}  // namespace qmoments
