#pragma once

#include "qmoments/types.hpp"

#include <functional>
#include <span>
#include <vector>

namespace qmoments {

/// Matrix exponential (scaling and squaring with Pade approximants).
Matrix expm(const Matrix& a);

/// Largest eigenvalue modulus.
double spectral_radius(const Matrix& a);

// ---------------------------------------------------------------------------
// Adaptive Dormand-Prince 5(4) integrator for complex vector ODEs y' = f(t, y).

using OdeRhs = std::function<void(double t, const Vector& y, Vector& dydt)>;

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 picks a step from the derivative scale
  long max_steps = 10'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

/// Integrates from times.front() and returns y at every entry of `times`
/// (non-decreasing). Output times are hit exactly, never interpolated.
std::vector<Vector> integrate_ode(const OdeRhs& rhs, const Vector& y0, std::span<const double> times,
                                  const OdeOptions& options = {}, OdeStats* stats = nullptr);

/// Single-interval convenience wrapper.
Vector integrate_ode(const OdeRhs& rhs, const Vector& y0, double t0, double t1, const OdeOptions& options = {},
                     OdeStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Globally adaptive Gauss-Kronrod (7, 15) quadrature of vector-valued integrands.

using VectorIntegrand = std::function<Vector(double)>;

struct QuadratureResult {
  Vector value;
  double error = 0.0;
  int intervals = 0;
};

QuadratureResult integrate_gk15(const VectorIntegrand& f, double a, double b, double rel_tol, double abs_tol = 0.0,
                                int max_intervals = 2000);

}  // namespace qmoments
