#pragma once

#include "qmoments/algebra.hpp"
#include "qmoments/defaults.hpp"
#include "qmoments/types.hpp"

#include <span>
#include <variant>
#include <vector>

namespace qmoments {

/// Coefficients of the first-order Heisenberg flow d a/dt = B a + phi and of
/// the pair-noise insertion Xi.
struct DriftData {
  Matrix B;    // J (i H + (Gamma^T - Gamma) / 2)
  Vector phi;  // i J f
  Matrix Xi;   // J Gamma^T J

  int phase_dim() const { return static_cast<int>(B.rows()); }
};

/// Validates the generator (ValidationError on failure) and builds B, phi, Xi.
DriftData drift_data(const QuadraticGenerator& gen, double tol_struct = defaults::kTolStruct);

/// e^{B t}.
Matrix propagator_constant(const Matrix& B, double t);

/// psi(t) = int_0^t e^{-B tau} phi d tau = ((1 - e^{-B t}) / B) phi, defined for singular B.
Vector psi_constant(const Matrix& B, const Vector& phi, double t);

/// beta(t) = int_0^t e^{-B tau} Xi e^{-B^T tau} d tau: the pair kernel with
/// B_1 + B_2 realized as X -> B X + X B^T.
Matrix beta_constant(const Matrix& B, const Matrix& Xi, double t);

/// Coefficients on [0, inf) described by piecewise-constant segments or by
/// samples joined with linear interpolation.
class CoefficientSchedule {
 public:
  struct Segment {
    double duration = 0.0;  // the last segment extends to infinity
    QuadraticGenerator generator;
  };

  static CoefficientSchedule constant(QuadraticGenerator gen);
  static CoefficientSchedule piecewise(std::vector<Segment> segments);
  /// Samples at strictly increasing times starting at 0; held constant after the last sample.
  static CoefficientSchedule sampled(std::vector<double> times, std::vector<QuadraticGenerator> samples);

  bool is_piecewise_constant() const { return std::holds_alternative<Piecewise>(data_); }
  int modes() const { return modes_; }
  /// Generator in effect at time t (interpolated for sampled schedules).
  QuadraticGenerator generator_at(double t) const;
  DriftData drift_at(double t) const;
  /// Times where the coefficients jump or have a kink, excluding 0.
  std::vector<double> breakpoints() const;
  const std::vector<Segment>& segments() const;

 private:
  struct Piecewise {
    std::vector<Segment> segments;
    std::vector<DriftData> drifts;
  };
  struct Sampled {
    std::vector<double> times;
    std::vector<QuadraticGenerator> samples;
  };
  std::variant<Piecewise, Sampled> data_;
  int modes_ = 0;
};

enum class BundleProvenance { Constant, TimeDependent };

enum class BundleMethod {
  Auto,        // segment-exact exponentials for piecewise schedules, Runge-Kutta otherwise
  Exact,       // piecewise schedules only
  RungeKutta,  // co-integrate G, G^{-1}, psi, beta with Dormand-Prince 5(4)
};

/// G(t), psi(t) and the pair kernel beta(t) on a time grid. psi and beta are
/// stored undressed (interaction picture); the dressed accessors multiply by
/// G on every slot.
class PropagatorBundle {
 public:
  PropagatorBundle(std::vector<double> times, std::vector<Matrix> G, std::vector<Matrix> G_inv,
                   std::vector<Vector> psi, std::vector<Matrix> beta, BundleProvenance provenance);

  std::span<const double> times() const { return times_; }
  std::size_t size() const { return times_.size(); }
  BundleProvenance provenance() const { return provenance_; }
  int phase_dim() const { return static_cast<int>(G_.front().rows()); }

  /// Index of grid point t (exact match up to 1e-12 relative); throws std::out_of_range when off-grid.
  std::size_t index_of(double t) const;

  const Matrix& G(std::size_t k) const { return G_.at(k); }
  const Matrix& G_inv(std::size_t k) const { return G_inv_.at(k); }
  const Vector& psi(std::size_t k) const { return psi_.at(k); }
  const Matrix& beta(std::size_t k) const { return beta_.at(k); }

  /// G psi: the affine part of the first moment.
  Vector dressed_psi(std::size_t k) const { return G(k) * psi(k); }
  /// G beta G^T: the noise part of the second central moment.
  Matrix dressed_beta(std::size_t k) const { return G(k) * beta(k) * G(k).transpose(); }

 private:
  std::vector<double> times_;
  std::vector<Matrix> G_, G_inv_;
  std::vector<Vector> psi_;
  std::vector<Matrix> beta_;
  BundleProvenance provenance_;
};

/// Throws std::invalid_argument unless grid starts at 0 and strictly increases.
void require_time_grid(std::span<const double> grid);

/// Closed-form bundle for constant coefficients.
PropagatorBundle constant_bundle(const DriftData& drift, std::span<const double> grid);

PropagatorBundle integrate_bundle(const CoefficientSchedule& schedule, std::span<const double> grid,
                                  double tol_ode = defaults::kTolOde, BundleMethod method = BundleMethod::Auto);

}  // namespace qmoments
