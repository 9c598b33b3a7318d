#pragma once

#include "qmoments/algebra.hpp"
#include "qmoments/defaults.hpp"
#include "qmoments/moments.hpp"

#include <span>
#include <vector>

namespace qmoments {

/// Jumps arriving at rate `rate`; each jump applies the quadratic dynamics of
/// `generator` for the model's jump duration.
struct PoissonProcess {
  double rate = 0.0;
  QuadraticGenerator generator;
};

struct PoissonModel {
  std::vector<PoissonProcess> processes;
  double jump_duration = 1.0;  // inner dynamics evaluated at t = s

  int modes() const { return processes.empty() ? 0 : processes.front().generator.modes; }
};

/// Throws ValidationError for an empty model, a non-positive rate or duration,
/// mismatched mode counts or an invalid generator.
void validate_model(const PoissonModel& model, double tol_struct = defaults::kTolStruct);

/// Coefficients of one jump: G = e^{B s}, psi(s), beta(s) (undressed).
struct OneStepCoefficients {
  Matrix G;
  Vector psi;
  Matrix beta;

  Vector dressed_psi() const { return G * psi; }                    // ((e^{Bs} - 1) / B) phi
  Matrix dressed_beta() const { return G * beta * G.transpose(); }  // noise part of one jump
};

OneStepCoefficients one_step_coefficients(const PoissonProcess& process, double duration = 1.0);

/// d/dt of every order: sum_j rate_j (Y_j - T), where Y_j is the hierarchy
/// after one jump of process j.
MomentHierarchy poisson_rhs(const PoissonModel& model, std::span<const OneStepCoefficients> coefficients,
                            const MomentHierarchy& h);
MomentHierarchy poisson_rhs(const PoissonModel& model, const MomentHierarchy& h);

/// Dense generator of the stacked hierarchy: d(stacked)/dt = A stacked.
struct BlockSystem {
  int modes = 0;
  int max_order = 0;
  Matrix A;
  std::vector<Eigen::Index> offsets;  // offsets[k] = start of order k, offsets[m + 1] = N

  Eigen::Index dimension() const { return A.rows(); }
  /// Coupling from order `col` into order `row`.
  Matrix block(int row, int col) const;
};

/// Throws BudgetError when max_order > kMaxPoissonOrder.
BlockSystem build_block_system(const PoissonModel& model, int max_order);

enum class PoissonSolver {
  Auto,         // stacked exponential up to kStackedPoissonOrder, convolution above
  Stacked,      // expm(A t) applied to the stacked hierarchy
  Convolution,  // order-ascending variation of constants with Chebyshev-interpolated lower orders
};

struct PoissonOptions {
  PoissonSolver solver = PoissonSolver::Auto;
  double quadrature_tol = defaults::kQuadratureTol;
};

/// Hierarchy at every grid time (grid starts at 0 and increases strictly).
std::vector<MomentHierarchy> evolve_poisson(const PoissonModel& model, const MomentHierarchy& initial,
                                            std::span<const double> times, const PoissonOptions& options = {});

/// Closed-form derivative of the central second moment D = T_2 - mu mu^T:
/// sum_j rate_j [G D G^T - D + (G - 1) mu mu^T (G - 1)^T + p ((G - 1) mu)^T
/// + ((G - 1) mu) p^T + p p^T + G beta G^T] with p = G psi. Needs order >= 2.
Matrix d12_poisson_rhs(const MomentHierarchy& h, const PoissonModel& model);

}  // namespace qmoments
