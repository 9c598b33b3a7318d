#include "qmoments/propagators.hpp"

#include "qmoments/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qmoments {

namespace {

DriftData drift_unchecked(const QuadraticGenerator& gen) {
  const Matrix J = structural_matrices(gen.modes).J;
  DriftData d;
  d.B = J * (kI * gen.H + (gen.Gamma.transpose() - gen.Gamma) / 2.0);
  d.phi = kI * (J * gen.f);
  d.Xi = J * gen.Gamma.transpose() * J;
  return d;
}

double one_norm(const Matrix& m) { return m.size() ? m.cwiseAbs().colwise().sum().maxCoeff() : 0.0; }

// Stop once a term is negligible relative to the partial sum.
constexpr double kSeriesEps = 1e-18;
constexpr int kMaxSeriesTerms = 80;

}  // namespace

DriftData drift_data(const QuadraticGenerator& gen, double tol_struct) {
  require_valid(gen, tol_struct);
  return drift_unchecked(gen);
}

Matrix propagator_constant(const Matrix& B, double t) {
  if (B.rows() != B.cols()) throw DimensionError("propagator_constant: B must be square");
  return expm(B * t);
}

Vector psi_constant(const Matrix& B, const Vector& phi, double t) {
  if (B.rows() != B.cols() || phi.size() != B.rows()) throw DimensionError("psi_constant: shape mismatch");
  const Eigen::Index d = B.rows();
  if (one_norm(B) * std::abs(t) < defaults::kTaylorRadius) {
    // sum_{j>=1} (-1)^{j+1} B^{j-1} t^j / j! phi
    Vector term = t * phi;
    Vector sum = term;
    for (int j = 1; j < kMaxSeriesTerms; ++j) {
      term = (-t / (j + 1)) * (B * term);
      sum += term;
      if (term.cwiseAbs().maxCoeff() <= kSeriesEps * std::max(1e-300, sum.cwiseAbs().maxCoeff())) break;
    }
    return sum;
  }
  // exp([[-B, phi], [0, 0]] t) carries psi(t) in its last column.
  Matrix aug = Matrix::Zero(d + 1, d + 1);
  aug.topLeftCorner(d, d) = -B * t;
  aug.topRightCorner(d, 1) = phi * t;
  return expm(aug).topRightCorner(d, 1);
}

Matrix beta_constant(const Matrix& B, const Matrix& Xi, double t) {
  if (B.rows() != B.cols() || Xi.rows() != B.rows() || Xi.cols() != B.cols()) {
    throw DimensionError("beta_constant: shape mismatch");
  }
  const Eigen::Index d = B.rows();
  if (one_norm(B) * std::abs(t) < defaults::kTaylorRadius) {
    // sum_{j>=1} (-1)^{j+1} t^j / j! S^{j-1}(Xi) with S(X) = B X + X B^T
    Matrix term = t * Xi;
    Matrix sum = term;
    for (int j = 1; j < kMaxSeriesTerms; ++j) {
      term = (-t / (j + 1)) * (B * term + term * B.transpose());
      sum += term;
      if (term.cwiseAbs().maxCoeff() <= kSeriesEps * std::max(1e-300, sum.cwiseAbs().maxCoeff())) break;
    }
    return sum;
  }
  // Van Loan: exp([[-B, Xi], [0, B^T]] t) = [[e^{-Bt}, F12], [0, e^{B^T t}]] with
  // F12 = beta(t) e^{B^T t}, hence beta(t) = F12 (e^{-Bt})^T.
  Matrix aug = Matrix::Zero(2 * d, 2 * d);
  aug.topLeftCorner(d, d) = -B * t;
  aug.topRightCorner(d, d) = Xi * t;
  aug.bottomRightCorner(d, d) = B.transpose() * t;
  const Matrix f = expm(aug);
  return f.topRightCorner(d, d) * f.topLeftCorner(d, d).transpose();
}

// ---------------------------------------------------------------------------

CoefficientSchedule CoefficientSchedule::constant(QuadraticGenerator gen) {
  return piecewise({Segment{std::numeric_limits<double>::infinity(), std::move(gen)}});
}

CoefficientSchedule CoefficientSchedule::piecewise(std::vector<Segment> segments) {
  if (segments.empty()) throw std::invalid_argument("schedule: at least one segment required");
  CoefficientSchedule s;
  s.modes_ = segments.front().generator.modes;
  Piecewise pw;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (seg.generator.modes != s.modes_) throw DimensionError("schedule: segments disagree on mode count");
    if (i + 1 < segments.size() && !(seg.duration > 0.0)) {
      throw std::invalid_argument("schedule: segment durations must be positive");
    }
    pw.drifts.push_back(drift_data(seg.generator));
  }
  pw.segments = std::move(segments);
  s.data_ = std::move(pw);
  return s;
}

CoefficientSchedule CoefficientSchedule::sampled(std::vector<double> times, std::vector<QuadraticGenerator> samples) {
  if (times.empty() || times.size() != samples.size()) {
    throw std::invalid_argument("schedule: need one generator per sample time");
  }
  require_time_grid(times);
  CoefficientSchedule s;
  s.modes_ = samples.front().modes;
  for (const auto& g : samples) {
    if (g.modes != s.modes_) throw DimensionError("schedule: samples disagree on mode count");
    require_valid(g);
  }
  s.data_ = Sampled{std::move(times), std::move(samples)};
  return s;
}

QuadraticGenerator CoefficientSchedule::generator_at(double t) const {
  if (const auto* pw = std::get_if<Piecewise>(&data_)) {
    double start = 0.0;
    for (const auto& seg : pw->segments) {
      if (t < start + seg.duration) return seg.generator;
      start += seg.duration;
    }
    return pw->segments.back().generator;
  }
  const auto& sm = std::get<Sampled>(data_);
  if (t >= sm.times.back()) return sm.samples.back();
  const auto it = std::upper_bound(sm.times.begin(), sm.times.end(), t);
  const std::size_t hi = std::max<std::size_t>(1, static_cast<std::size_t>(it - sm.times.begin()));
  const std::size_t lo = hi - 1;
  const double w = (t - sm.times[lo]) / (sm.times[hi] - sm.times[lo]);
  const auto& a = sm.samples[lo];
  const auto& b = sm.samples[hi];
  return QuadraticGenerator::from_gamma((1 - w) * a.H + w * b.H, (1 - w) * a.f + w * b.f,
                                        (1 - w) * a.Gamma + w * b.Gamma);
}

DriftData CoefficientSchedule::drift_at(double t) const {
  if (const auto* pw = std::get_if<Piecewise>(&data_)) {
    double start = 0.0;
    for (std::size_t i = 0; i < pw->segments.size(); ++i) {
      if (t < start + pw->segments[i].duration) return pw->drifts[i];
      start += pw->segments[i].duration;
    }
    return pw->drifts.back();
  }
  return drift_unchecked(generator_at(t));
}

std::vector<double> CoefficientSchedule::breakpoints() const {
  std::vector<double> out;
  if (const auto* pw = std::get_if<Piecewise>(&data_)) {
    double start = 0.0;
    for (std::size_t i = 0; i + 1 < pw->segments.size(); ++i) {
      start += pw->segments[i].duration;
      out.push_back(start);
    }
    return out;
  }
  const auto& sm = std::get<Sampled>(data_);
  out.assign(sm.times.begin() + 1, sm.times.end());
  return out;
}

const std::vector<CoefficientSchedule::Segment>& CoefficientSchedule::segments() const {
  const auto* pw = std::get_if<Piecewise>(&data_);
  if (!pw) throw std::logic_error("schedule: segments() requires a piecewise-constant schedule");
  return pw->segments;
}

// ---------------------------------------------------------------------------

PropagatorBundle::PropagatorBundle(std::vector<double> times, std::vector<Matrix> G, std::vector<Matrix> G_inv,
                                   std::vector<Vector> psi, std::vector<Matrix> beta, BundleProvenance provenance)
    : times_(std::move(times)),
      G_(std::move(G)),
      G_inv_(std::move(G_inv)),
      psi_(std::move(psi)),
      beta_(std::move(beta)),
      provenance_(provenance) {
  const auto n = times_.size();
  if (n == 0 || G_.size() != n || G_inv_.size() != n || psi_.size() != n || beta_.size() != n) {
    throw std::invalid_argument("PropagatorBundle: inconsistent sample counts");
  }
}

std::size_t PropagatorBundle::index_of(double t) const {
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (std::abs(times_[k] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return k;
  }
  throw std::out_of_range("PropagatorBundle: time " + std::to_string(t) + " is not on the bundle grid");
}

void require_time_grid(std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("time grid is empty");
  if (grid.front() != 0.0) throw std::invalid_argument("time grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");
  }
}

PropagatorBundle constant_bundle(const DriftData& drift, std::span<const double> grid) {
  require_time_grid(grid);
  std::vector<Matrix> G, G_inv, beta;
  std::vector<Vector> psi;
  for (double t : grid) {
    G.push_back(propagator_constant(drift.B, t));
    G_inv.push_back(propagator_constant(drift.B, -t));
    psi.push_back(psi_constant(drift.B, drift.phi, t));
    beta.push_back(beta_constant(drift.B, drift.Xi, t));
  }
  return {std::vector<double>(grid.begin(), grid.end()), std::move(G), std::move(G_inv), std::move(psi),
          std::move(beta), BundleProvenance::Constant};
}

namespace {

struct BundleState {
  Matrix G, G_inv, beta;
  Vector psi;
};

// Merged, de-duplicated stopping times: grid points plus interior breakpoints.
std::vector<double> stop_times(std::span<const double> grid, const std::vector<double>& breaks) {
  std::vector<double> stops(grid.begin(), grid.end());
  for (double b : breaks) {
    if (b < grid.back()) stops.push_back(b);
  }
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  return stops;
}

PropagatorBundle collect(std::span<const double> grid, const std::vector<double>& stops,
                         const std::vector<BundleState>& states, BundleProvenance provenance) {
  std::vector<Matrix> G, G_inv, beta;
  std::vector<Vector> psi;
  std::size_t j = 0;
  for (double t : grid) {
    while (stops[j] != t) ++j;
    G.push_back(states[j].G);
    G_inv.push_back(states[j].G_inv);
    psi.push_back(states[j].psi);
    beta.push_back(states[j].beta);
  }
  return {std::vector<double>(grid.begin(), grid.end()), std::move(G), std::move(G_inv), std::move(psi),
          std::move(beta), provenance};
}

std::vector<BundleState> march_exact(const CoefficientSchedule& schedule, const std::vector<double>& stops, int d) {
  std::vector<BundleState> states;
  BundleState s{Matrix::Identity(d, d), Matrix::Identity(d, d), Matrix::Zero(d, d), Vector::Zero(d)};
  states.push_back(s);
  for (std::size_t i = 1; i < stops.size(); ++i) {
    const double h = stops[i] - stops[i - 1];
    // Coefficients are constant on [stops[i-1], stops[i]) by construction of the stop list.
    const DriftData drift = schedule.drift_at(stops[i - 1]);
    s.psi += s.G_inv * psi_constant(drift.B, drift.phi, h);
    s.beta += s.G_inv * beta_constant(drift.B, drift.Xi, h) * s.G_inv.transpose();
    s.G = propagator_constant(drift.B, h) * s.G;
    s.G_inv = s.G_inv * propagator_constant(drift.B, -h);
    states.push_back(s);
  }
  return states;
}

std::vector<BundleState> march_rk(const CoefficientSchedule& schedule, const std::vector<double>& stops, int d,
                                  double tol_ode) {
  const Eigen::Index dd = static_cast<Eigen::Index>(d) * d;
  const Eigen::Index size = 3 * dd + d;
  auto unpack = [d, dd](const Vector& y, Eigen::Index block) {
    return Eigen::Map<const Matrix>(y.data() + block * dd, d, d);
  };
  const OdeRhs rhs = [&](double t, const Vector& y, Vector& dy) {
    const DriftData drift = schedule.drift_at(t);
    const auto G = unpack(y, 0);
    const auto G_inv = unpack(y, 1);
    Eigen::Map<Matrix>(dy.data(), d, d) = drift.B * G;
    Eigen::Map<Matrix>(dy.data() + dd, d, d) = -G_inv * drift.B;
    Eigen::Map<Matrix>(dy.data() + 2 * dd, d, d) = G_inv * drift.Xi * G_inv.transpose();
    dy.segment(3 * dd, d) = G_inv * drift.phi;
  };
  Vector y = Vector::Zero(size);
  Eigen::Map<Matrix>(y.data(), d, d).setIdentity();
  Eigen::Map<Matrix>(y.data() + dd, d, d).setIdentity();

  OdeOptions options;
  options.rtol = tol_ode;
  options.atol = tol_ode * 1e-2;
  std::vector<BundleState> states;
  auto push = [&](const Vector& v) {
    states.push_back({unpack(v, 0), unpack(v, 1), unpack(v, 2), v.segment(3 * dd, d)});
  };
  push(y);
  for (std::size_t i = 1; i < stops.size(); ++i) {
    // Each interval lies inside one smooth piece of the schedule; clamp the
    // evaluation time so a coefficient jump at stops[i] is never sampled.
    const double lo = stops[i - 1], hi = std::nextafter(stops[i], lo);
    const OdeRhs piece = [&rhs, lo, hi](double t, const Vector& yy, Vector& dy) { rhs(std::clamp(t, lo, hi), yy, dy); };
    y = integrate_ode(piece, y, stops[i - 1], stops[i], options);
    push(y);
  }
  return states;
}

}  // namespace

PropagatorBundle integrate_bundle(const CoefficientSchedule& schedule, std::span<const double> grid, double tol_ode,
                                  BundleMethod method) {
  require_time_grid(grid);
  const int d = 2 * schedule.modes();
  const auto stops = stop_times(grid, schedule.breakpoints());
  if (method == BundleMethod::Exact && !schedule.is_piecewise_constant()) {
    throw std::invalid_argument("integrate_bundle: exact method requires a piecewise-constant schedule");
  }
  const bool exact = method == BundleMethod::Exact ||
                     (method == BundleMethod::Auto && schedule.is_piecewise_constant());
  const auto states = exact ? march_exact(schedule, stops, d) : march_rk(schedule, stops, d, tol_ode);
  const bool constant = schedule.is_piecewise_constant() && schedule.breakpoints().empty();
  return collect(grid, stops, states, constant ? BundleProvenance::Constant : BundleProvenance::TimeDependent);
}

}  // namespace qmoments
