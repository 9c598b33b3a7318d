#include "qmoments/poisson.hpp"

#include "qmoments/linalg.hpp"
#include "qmoments/propagators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qmoments {

void validate_model(const PoissonModel& model, double tol_struct) {
  if (model.processes.empty()) throw ValidationError("Poisson model has no processes");
  if (!(model.jump_duration > 0.0) || !std::isfinite(model.jump_duration)) {
    throw ValidationError("Poisson jump duration must be positive");
  }
  const int n = model.modes();
  for (std::size_t j = 0; j < model.processes.size(); ++j) {
    const auto& p = model.processes[j];
    if (!(p.rate > 0.0) || !std::isfinite(p.rate)) {
      throw ValidationError("Poisson process " + std::to_string(j) + ": rate must be positive");
    }
    if (p.generator.modes != n) throw ValidationError("Poisson processes disagree on the mode count");
    const auto report = validate_generator(p.generator, tol_struct);
    if (!report.ok()) throw ValidationError("Poisson process " + std::to_string(j) + ": " + report.describe());
  }
}

OneStepCoefficients one_step_coefficients(const PoissonProcess& process, double duration) {
  const DriftData drift = drift_data(process.generator);
  return {propagator_constant(drift.B, duration), psi_constant(drift.B, drift.phi, duration),
          beta_constant(drift.B, drift.Xi, duration)};
}

namespace {

std::vector<OneStepCoefficients> all_coefficients(const PoissonModel& model) {
  validate_model(model);
  std::vector<OneStepCoefficients> out;
  out.reserve(model.processes.size());
  for (const auto& p : model.processes) out.push_back(one_step_coefficients(p, model.jump_duration));
  return out;
}

Vector apply_kron_power(const Matrix& g, const Vector& v, int order) {
  Vector out = v;
  for (int s = 0; s < order; ++s) out = apply_to_slot(g, out, order, s);
  return out;
}

}  // namespace

MomentHierarchy poisson_rhs(const PoissonModel& model, std::span<const OneStepCoefficients> coefficients,
                            const MomentHierarchy& h) {
  if (h.modes() != model.modes()) throw DimensionError("poisson_rhs: hierarchy and model disagree on modes");
  if (coefficients.size() != model.processes.size()) throw DimensionError("poisson_rhs: one coefficient set per process");
  MomentHierarchy out(h.modes(), h.max_order());
  for (int k = 0; k <= h.max_order(); ++k) out.tensor(k).setZero();
  for (std::size_t j = 0; j < coefficients.size(); ++j) {
    const auto& c = coefficients[j];
    const MomentHierarchy y = apply_slotwise(c.G, partition_sum(h, c.psi, c.beta));
    const double rate = model.processes[j].rate;
    for (int k = 0; k <= h.max_order(); ++k) out.tensor(k) += rate * (y.tensor(k) - h.tensor(k));
  }
  return out;
}

MomentHierarchy poisson_rhs(const PoissonModel& model, const MomentHierarchy& h) {
  const auto c = all_coefficients(model);
  return poisson_rhs(model, c, h);
}

Matrix BlockSystem::block(int row, int col) const {
  if (row < 0 || col < 0 || row > max_order || col > max_order) throw std::out_of_range("BlockSystem::block");
  return A.block(offsets[row], offsets[col], offsets[row + 1] - offsets[row], offsets[col + 1] - offsets[col]);
}

BlockSystem build_block_system(const PoissonModel& model, int max_order) {
  if (max_order < 0) throw std::invalid_argument("build_block_system: negative order");
  if (max_order > defaults::kMaxPoissonOrder) {
    throw BudgetError("build_block_system: order " + std::to_string(max_order) + " exceeds the Poisson order limit " +
                      std::to_string(defaults::kMaxPoissonOrder));
  }
  const auto coeffs = all_coefficients(model);
  const int n = model.modes();
  MomentHierarchy probe(n, max_order);
  BlockSystem sys;
  sys.modes = n;
  sys.max_order = max_order;
  for (int k = 0; k <= max_order + 1; ++k) sys.offsets.push_back(probe.stacked_offset(k));
  const Eigen::Index dim = probe.stacked_size();
  sys.A = Matrix::Zero(dim, dim);
  Vector unit = Vector::Zero(dim);
  // The right-hand side is linear in the stacked hierarchy, T_0 included.
  for (Eigen::Index c = 0; c < dim; ++c) {
    unit(c) = 1.0;
    sys.A.col(c) = poisson_rhs(model, coeffs, MomentHierarchy::from_stacked(n, max_order, unit)).stacked();
    unit(c) = 0.0;
  }
  return sys;
}

namespace {

// Barycentric interpolant on Chebyshev-Lobatto nodes of [0, T].
struct ChebyshevSeries {
  double span = 0.0;
  std::vector<double> nodes;
  std::vector<Vector> values;

  Vector operator()(double t) const {
    const int p = static_cast<int>(nodes.size()) - 1;
    Vector num = Vector::Zero(values.front().size());
    double den = 0.0;
    for (int j = 0; j <= p; ++j) {
      const double diff = t - nodes[j];
      if (diff == 0.0) return values[j];
      double w = (j % 2 == 0) ? 1.0 : -1.0;
      if (j == 0 || j == p) w *= 0.5;
      w /= diff;
      num += w * values[j];
      den += w;
    }
    return num / den;
  }
};

std::vector<double> lobatto_nodes(double span, int p) {
  std::vector<double> t(p + 1);
  for (int j = 0; j <= p; ++j) t[j] = 0.5 * span * (1.0 - std::cos(std::numbers::pi * j / p));
  t.front() = 0.0;
  t.back() = span;
  return t;
}

class OrderSolver {
 public:
  OrderSolver(const PoissonModel& model, const std::vector<OneStepCoefficients>& coeffs, int order, double tol)
      : model_(model), coeffs_(coeffs), order_(order), tol_(tol) {
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      norm_ += model.processes[j].rate * (std::pow(coeffs[j].G.cwiseAbs().colwise().sum().maxCoeff(), order) + 1.0);
    }
  }

  // M v with M = sum_j rate_j (G_j^{(x)k} - 1).
  Vector apply_m(const Vector& v) const {
    Vector out = Vector::Zero(v.size());
    for (std::size_t j = 0; j < coeffs_.size(); ++j) {
      out += model_.processes[j].rate * (apply_kron_power(coeffs_[j].G, v, order_) - v);
    }
    return out;
  }

  // e^{M u} v by substepped Taylor series.
  Vector expmv(double u, const Vector& v) const {
    if (u == 0.0 || v.size() == 0) return v;
    const int steps = std::max(1, static_cast<int>(std::ceil(u * norm_)));
    const double h = u / steps;
    Vector x = v;
    for (int s = 0; s < steps; ++s) {
      Vector term = x, sum = x;
      for (int q = 1; q < 60; ++q) {
        term = apply_m(term) * (h / q);
        sum += term;
        if (term.cwiseAbs().maxCoeff() <= 1e-18 * std::max(1e-300, sum.cwiseAbs().maxCoeff())) break;
      }
      x = sum;
    }
    return x;
  }

  // Forcing sum_j rate_j G_j^{(x)k} (partition terms with I3 != I) from the lower orders at time s.
  Vector forcing(double s, const Vector& t0, const std::vector<ChebyshevSeries>& lower) const {
    MomentHierarchy h(model_.modes(), order_);
    h.tensor(0) = t0;
    for (int q = 1; q < order_; ++q) h.tensor(q) = lower[q](s);
    h.tensor(order_).setZero();
    Vector out = Vector::Zero(h.tensor(order_).size());
    for (std::size_t j = 0; j < coeffs_.size(); ++j) {
      const auto& c = coeffs_[j];
      const Vector x = partition_sum(h, c.psi, c.beta, true).tensor(order_);
      out += model_.processes[j].rate * apply_kron_power(c.G, x, order_);
    }
    return out;
  }

  // Values at the ascending times (times[0] = 0 carries `start`).
  std::vector<Vector> march(const Vector& start, std::span<const double> times, const Vector& t0,
                            const std::vector<ChebyshevSeries>& lower) const {
    std::vector<Vector> out{start};
    Vector x = start;
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double a = times[i - 1], b = times[i];
      const auto integrand = [&](double s) { return expmv(b - s, forcing(s, t0, lower)); };
      const auto q = integrate_gk15(integrand, a, b, tol_, tol_ * std::max(1.0, x.cwiseAbs().maxCoeff()) * (b - a));
      x = expmv(b - a, x) + q.value;
      out.push_back(x);
    }
    return out;
  }

 private:
  const PoissonModel& model_;
  const std::vector<OneStepCoefficients>& coeffs_;
  int order_;
  double tol_;
  double norm_ = 0.0;
};

std::vector<double> merged(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<MomentHierarchy> evolve_convolution(const PoissonModel& model, const std::vector<OneStepCoefficients>& coeffs,
                                                const MomentHierarchy& initial, std::span<const double> times,
                                                double tol) {
  const int m = initial.max_order();
  const double span = times.back();
  std::vector<MomentHierarchy> out(times.size(), initial);
  if (span == 0.0) return out;
  std::vector<ChebyshevSeries> lower(m + 1);
  const Vector& t0 = initial.tensor(0);
  const auto values_at = [](const std::vector<double>& all, const std::vector<Vector>& vals, std::span<const double> want) {
    std::vector<Vector> picked;
    for (double t : want) picked.push_back(vals[std::lower_bound(all.begin(), all.end(), t) - all.begin()]);
    return picked;
  };
  for (int k = 1; k <= m; ++k) {
    const OrderSolver solver(model, coeffs, k, tol);
    const Vector& start = initial.tensor(k);
    std::vector<Vector> at_grid;
    if (k == m) {
      at_grid = solver.march(start, times, t0, lower);
    } else {
      int p = 16;
      auto nodes = lobatto_nodes(span, p);
      auto all = merged(nodes, times);
      auto vals = solver.march(start, all, t0, lower);
      ChebyshevSeries series{span, nodes, values_at(all, vals, nodes)};
      for (;;) {
        const int p2 = 2 * p;
        const auto nodes2 = lobatto_nodes(span, p2);
        const auto all2 = merged(nodes2, times);
        const auto vals2 = solver.march(start, all2, t0, lower);
        ChebyshevSeries series2{span, nodes2, values_at(all2, vals2, nodes2)};
        double err = 0.0, scale = 1e-300;
        for (int j = 1; j < p2; j += 2) {
          err = std::max(err, (series(nodes2[j]) - series2.values[j]).cwiseAbs().maxCoeff());
          scale = std::max(scale, series2.values[j].cwiseAbs().maxCoeff());
        }
        p = p2;
        series = std::move(series2);
        all = all2;
        vals = vals2;
        if (err <= 1e-13 * std::max(1.0, scale) || p >= 1024) break;
      }
      lower[k] = std::move(series);
      at_grid = values_at(all, vals, times);
    }
    for (std::size_t i = 0; i < times.size(); ++i) out[i].tensor(k) = at_grid[i];
  }
  return out;
}

}  // namespace

std::vector<MomentHierarchy> evolve_poisson(const PoissonModel& model, const MomentHierarchy& initial,
                                            std::span<const double> times, const PoissonOptions& options) {
  require_time_grid(times);
  const auto coeffs = all_coefficients(model);
  if (initial.modes() != model.modes()) throw DimensionError("evolve_poisson: hierarchy and model disagree on modes");
  PoissonSolver solver = options.solver;
  if (solver == PoissonSolver::Auto) {
    solver = initial.max_order() <= defaults::kStackedPoissonOrder ? PoissonSolver::Stacked : PoissonSolver::Convolution;
  }
  if (solver == PoissonSolver::Convolution) return evolve_convolution(model, coeffs, initial, times, options.quadrature_tol);

  const BlockSystem sys = build_block_system(model, initial.max_order());
  const Vector x0 = initial.stacked();
  std::vector<MomentHierarchy> out;
  out.reserve(times.size());
  for (double t : times) {
    out.push_back(MomentHierarchy::from_stacked(initial.modes(), initial.max_order(), expm(sys.A * t) * x0));
  }
  return out;
}

Matrix d12_poisson_rhs(const MomentHierarchy& h, const PoissonModel& model) {
  if (h.max_order() < 2) throw std::invalid_argument("d12_poisson_rhs: hierarchy order must be >= 2");
  if (h.modes() != model.modes()) throw DimensionError("d12_poisson_rhs: hierarchy and model disagree on modes");
  const auto coeffs = all_coefficients(model);
  const Vector mu = h.first_moments();
  const Matrix D = central_second_moment(h);
  const Eigen::Index d = mu.size();
  Matrix out = Matrix::Zero(d, d);
  for (std::size_t j = 0; j < coeffs.size(); ++j) {
    const Matrix& G = coeffs[j].G;
    const Vector p = coeffs[j].dressed_psi();
    const Vector shift = G * mu - mu;
    out += model.processes[j].rate *
           (G * D * G.transpose() - D + shift * shift.transpose() + p * shift.transpose() + shift * p.transpose() +
            p * p.transpose() + coeffs[j].dressed_beta());
  }
  return out;
}

}  // namespace qmoments
