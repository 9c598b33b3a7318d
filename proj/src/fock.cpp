#include "qmoments/fock.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace qmoments {

long FockConfig::dimension() const {
  long d = 1;
  for (int k = 0; k < modes; ++k) {
    d *= cutoff;
    if (d > (1L << 40)) return d;
  }
  return d;
}

void FockConfig::check(long max_dimension) const {
  if (modes < 1 || cutoff < 1) throw DimensionError("FockConfig: modes and cutoff must be positive");
  if (dimension() > max_dimension) {
    throw BudgetError("Fock dimension " + std::to_string(dimension()) + " exceeds the budget " +
                      std::to_string(max_dimension));
  }
}

std::vector<Matrix> OperatorSet::dense_jumps() const {
  std::vector<Matrix> out;
  for (const auto& c : jumps) out.emplace_back(c);
  return out;
}

Matrix annihilator(int cutoff) {
  Matrix a = Matrix::Zero(cutoff, cutoff);
  for (int k = 1; k < cutoff; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

namespace {

long stride_of(const FockConfig& cfg, int mode) {
  long s = 1;
  for (int k = mode + 1; k < cfg.modes; ++k) s *= cfg.cutoff;
  return s;
}

SparseMatrix mode_annihilator(const FockConfig& cfg, int mode) {
  const long d = cfg.dimension();
  const long stride = stride_of(cfg, mode);
  std::vector<Eigen::Triplet<cplx>> entries;
  for (long idx = 0; idx < d; ++idx) {
    const long occ = (idx / stride) % cfg.cutoff;
    if (occ > 0) entries.emplace_back(idx - stride, idx, std::sqrt(static_cast<double>(occ)));
  }
  SparseMatrix a(d, d);
  a.setFromTriplets(entries.begin(), entries.end());
  return a;
}

SparseMatrix linear_combination(std::span<const SparseMatrix> ladder, const Vector& coeffs) {
  SparseMatrix out(ladder.front().rows(), ladder.front().cols());
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
    if (coeffs(k) != 0.0) out += coeffs(k) * ladder[k];
  }
  return out;
}

std::vector<Vector> jumps_from_gamma(const Matrix& gamma) {
  const int d = static_cast<int>(gamma.rows());
  const Matrix E = structural_matrices(d / 2).E;
  const Matrix ge = gamma * E;
  Eigen::SelfAdjointEigenSolver<Matrix> eig((ge + ge.adjoint()) / 2.0);
  const double cut = 1e-14 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<Vector> out;
  for (int k = 0; k < d; ++k) {
    const double ev = eig.eigenvalues()(k);
    if (ev > cut) out.push_back(std::sqrt(ev) * eig.eigenvectors().col(k));
  }
  return out;
}

}  // namespace

OperatorSet build_operators(const QuadraticGenerator& gen, const FockConfig& cfg) {
  cfg.check();
  if (gen.modes != cfg.modes) throw DimensionError("build_operators: generator and Fock space disagree on modes");
  OperatorSet ops;
  ops.config = cfg;
  const int n = cfg.modes;
  for (int k = 0; k < n; ++k) ops.ladder.push_back(mode_annihilator(cfg, k));
  for (int k = 0; k < n; ++k) ops.ladder.push_back(SparseMatrix(ops.ladder[k].adjoint()));

  const long d = cfg.dimension();
  ops.H = SparseMatrix(d, d);
  for (int k = 0; k < 2 * n; ++k) {
    for (int l = 0; l < 2 * n; ++l) {
      if (gen.H(k, l) != 0.0) ops.H += (0.5 * gen.H(k, l)) * SparseMatrix(ops.ladder[k] * ops.ladder[l]);
    }
  }
  ops.H += linear_combination(ops.ladder, gen.f);

  const std::vector<Vector> gammas = gen.jumps.empty() ? jumps_from_gamma(gen.Gamma) : gen.jumps;
  ops.damping = SparseMatrix(d, d);
  for (const auto& g : gammas) {
    ops.jumps.push_back(linear_combination(ops.ladder, g));
    ops.jumps_adjoint.push_back(SparseMatrix(ops.jumps.back().adjoint()));
    ops.damping += SparseMatrix(ops.jumps_adjoint.back() * ops.jumps.back());
  }
  ops.H.prune(cplx(0.0));
  ops.damping.prune(cplx(0.0));
  return ops;
}

Matrix lindblad_rhs(const Matrix& rho, const OperatorSet& ops) {
  if (rho.rows() != ops.dimension() || rho.cols() != ops.dimension()) {
    throw DimensionError("lindblad_rhs: state and operators disagree on the dimension");
  }
  const cplx i(0.0, 1.0);
  Matrix out = -i * (ops.H * rho - rho * ops.H);
  for (std::size_t j = 0; j < ops.jumps.size(); ++j) {
    const Matrix r = rho * ops.jumps_adjoint[j];
    out += ops.jumps[j] * r;
  }
  out -= 0.5 * (ops.damping * rho + rho * ops.damping);
  return out;
}

Matrix lindblad_generator(const Matrix& H, std::span<const Matrix> jumps, const Matrix& rho) {
  if (H.rows() != rho.rows() || rho.rows() != rho.cols()) throw DimensionError("lindblad_generator: shape mismatch");
  const cplx i(0.0, 1.0);
  Matrix out = -i * (H * rho - rho * H);
  for (const auto& c : jumps) {
    const Matrix k = c.adjoint() * c;
    out += c * rho * c.adjoint() - 0.5 * (k * rho + rho * k);
  }
  return out;
}

Matrix heisenberg_generator(const Matrix& H, std::span<const Matrix> jumps, const Matrix& X) {
  if (H.rows() != X.rows() || X.rows() != X.cols()) throw DimensionError("heisenberg_generator: shape mismatch");
  const cplx i(0.0, 1.0);
  Matrix out = i * (H * X - X * H);
  for (const auto& c : jumps) {
    const Matrix cd = c.adjoint();
    out += 0.5 * ((cd * X - X * cd) * c + cd * (X * c - c * X));
  }
  return out;
}

double leakage(const Matrix& rho, const FockConfig& cfg) {
  const long d = cfg.dimension();
  if (rho.rows() != d) throw DimensionError("leakage: state and Fock space disagree on the dimension");
  double worst = 0.0;
  for (int k = 0; k < cfg.modes; ++k) {
    const long stride = stride_of(cfg, k);
    double pop = 0.0;
    for (long idx = 0; idx < d; ++idx) {
      if ((idx / stride) % cfg.cutoff >= cfg.cutoff - 2) pop += std::abs(rho(idx, idx).real());
    }
    worst = std::max(worst, pop);
  }
  return worst;
}

void validate_state(const Matrix& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) throw ValidationError("density matrix must be square");
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > 1e-10) throw ValidationError("density matrix is not Hermitian (max violation " + std::to_string(herm) + ")");
  const double tr = std::abs(rho.trace() - 1.0);
  if (tr > 1e-10) throw ValidationError("density matrix trace differs from 1 by " + std::to_string(tr));
  Eigen::SelfAdjointEigenSolver<Matrix> eig((rho + rho.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-9) throw ValidationError("density matrix has a negative eigenvalue");
}

namespace {

using RhsFactory = std::function<OdeRhs(std::size_t)>;

void record(MasterTrajectory& out, const Matrix& rho, const FockConfig& cfg) {
  if (!out.states.empty()) out.max_trace_drift = std::max(out.max_trace_drift, std::abs(rho.trace() - out.states.back().trace()));
  out.max_leakage = std::max(out.max_leakage, leakage(rho, cfg));
  out.states.push_back(rho);
}

OdeRhs master_rhs(const OperatorSet& ops) {
  const int d = ops.dimension();
  return [&ops, d](double, const Vector& y, Vector& dydt) {
    const Eigen::Map<const Matrix> rho(y.data(), d, d);
    dydt.resize(y.size());
    Eigen::Map<Matrix>(dydt.data(), d, d) = lindblad_rhs(rho, ops);
  };
}

}  // namespace

MasterTrajectory integrate_master(const Matrix& rho0, const OperatorSet& ops, std::span<const double> times,
                                  double tol) {
  const OperatorSegment single{0.0, ops};
  return integrate_master(rho0, std::span<const OperatorSegment>(&single, 1), times, tol);
}

MasterTrajectory integrate_master(const Matrix& rho0, std::span<const OperatorSegment> segments,
                                  std::span<const double> times, double tol) {
  require_time_grid(times);
  if (segments.empty()) throw std::invalid_argument("integrate_master: no segments");
  const FockConfig cfg = segments.front().ops.config;
  const int d = segments.front().ops.dimension();
  if (rho0.rows() != d || rho0.cols() != d) throw DimensionError("integrate_master: initial state has the wrong shape");

  MasterTrajectory out;
  Vector y = Eigen::Map<const Vector>(rho0.data(), static_cast<Eigen::Index>(d) * d);
  record(out, rho0, cfg);
  const OdeOptions opts{tol, tol * 1e-2, 0.0, 10'000'000};
  double start = 0.0;
  std::size_t next = 1;
  for (std::size_t s = 0; s < segments.size() && next < times.size(); ++s) {
    const bool last = s + 1 == segments.size();
    const double end = last ? times.back() : std::min(start + segments[s].duration, times.back());
    if (segments[s].ops.dimension() != d) throw DimensionError("integrate_master: segments disagree on the dimension");
    std::vector<double> stops{start};
    std::vector<bool> is_output{false};
    while (next < times.size() && times[next] <= end) {
      if (times[next] > stops.back()) {
        stops.push_back(times[next]);
        is_output.push_back(true);
      } else {
        is_output.back() = true;
      }
      ++next;
    }
    if (stops.back() < end) {
      stops.push_back(end);
      is_output.push_back(false);
    }
    if (stops.size() > 1) {
      const auto ys = integrate_ode(master_rhs(segments[s].ops), y, stops, opts);
      for (std::size_t i = 1; i < ys.size(); ++i) {
        if (is_output[i]) record(out, Eigen::Map<const Matrix>(ys[i].data(), d, d), cfg);
      }
      y = ys.back();
    }
    start = end;
  }
  out.leakage_exceeded = out.max_leakage > defaults::kLeakageThreshold;
  return out;
}

Matrix lindblad_superoperator(const OperatorSet& ops) {
  const long d = ops.dimension();
  if (d > defaults::kMaxSuperopDimension) {
    throw BudgetError("superoperator of dimension " + std::to_string(d) + " exceeds the budget " +
                      std::to_string(defaults::kMaxSuperopDimension));
  }
  SparseMatrix id(d, d);
  id.setIdentity();
  const cplx i(0.0, 1.0);
  SparseMatrix s = -i * (Eigen::kroneckerProduct(id, ops.H).eval() -
                         Eigen::kroneckerProduct(SparseMatrix(ops.H.transpose()), id).eval());
  for (const auto& c : ops.jumps) s += Eigen::kroneckerProduct(SparseMatrix(c.conjugate()), c).eval();
  s -= 0.5 * (Eigen::kroneckerProduct(id, ops.damping).eval() +
              Eigen::kroneckerProduct(SparseMatrix(ops.damping.transpose()), id).eval());
  return Matrix(s);
}

namespace {

Vector vec(const Matrix& rho) { return Eigen::Map<const Vector>(rho.data(), rho.size()); }
Matrix unvec(const Vector& v, long d) { return Eigen::Map<const Matrix>(v.data(), d, d); }

}  // namespace

MasterTrajectory evolve_master_exact(const Matrix& rho0, const OperatorSet& ops, std::span<const double> times) {
  require_time_grid(times);
  const Matrix s = lindblad_superoperator(ops);
  if (rho0.rows() != ops.dimension()) throw DimensionError("evolve_master_exact: initial state has the wrong shape");
  MasterTrajectory out;
  const Vector v0 = vec(rho0);
  for (double t : times) record(out, unvec(expm(s * t) * v0, ops.dimension()), ops.config);
  out.leakage_exceeded = out.max_leakage > defaults::kLeakageThreshold;
  return out;
}

Matrix poisson_jump_map(const OperatorSet& ops, double duration) {
  if (!(duration > 0.0)) throw std::invalid_argument("poisson_jump_map: duration must be positive");
  return expm(lindblad_superoperator(ops) * duration);
}

double choi_min_eigenvalue(const Matrix& phi, int dimension) {
  const long d = dimension;
  if (phi.rows() != d * d || phi.cols() != d * d) throw DimensionError("choi_min_eigenvalue: map has the wrong shape");
  Matrix choi(d * d, d * d);
  for (long i = 0; i < d; ++i) {
    for (long j = 0; j < d; ++j) {
      for (long a = 0; a < d; ++a) {
        for (long b = 0; b < d; ++b) choi(i * d + a, j * d + b) = phi(a + b * d, i + j * d);
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig((choi + choi.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

MasterTrajectory integrate_poisson_master(const Matrix& rho0, std::span<const Matrix> maps,
                                          std::span<const double> rates, std::span<const double> times,
                                          const FockConfig& cfg) {
  require_time_grid(times);
  if (maps.empty() || maps.size() != rates.size()) throw std::invalid_argument("integrate_poisson_master: one rate per map");
  const long d = rho0.rows();
  Matrix gen = Matrix::Zero(d * d, d * d);
  for (std::size_t j = 0; j < maps.size(); ++j) {
    if (maps[j].rows() != d * d) throw DimensionError("integrate_poisson_master: map has the wrong shape");
    gen += rates[j] * (maps[j] - Matrix::Identity(d * d, d * d));
  }
  MasterTrajectory out;
  const Vector v0 = vec(rho0);
  for (double t : times) record(out, unvec(expm(gen * t) * v0, d), cfg);
  out.leakage_exceeded = out.max_leakage > defaults::kLeakageThreshold;
  return out;
}

namespace {

cplx trace_product(const SparseMatrix& a, const Matrix& m) {
  cplx acc = 0.0;
  for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) acc += it.value() * m(c, it.row());
  }
  return acc;
}

// Depth-first over suffix products S = a_{i_j} ... a_{i_k} rho; `flat` is the
// row-major index of the suffix tuple and `depth` its length.
void moments_rec(const OperatorSet& ops, const Matrix& suffix, Eigen::Index flat, int depth, int max_order,
                 MomentHierarchy& h) {
  const int d = h.phase_dim();
  const Eigen::Index weight = tensor_size(d, depth);
  for (int i = 0; i < d; ++i) {
    const Eigen::Index idx = i * weight + flat;
    if (depth + 1 == max_order) {
      h.tensor(depth + 1)(idx) = trace_product(ops.ladder[i], suffix);
    } else {
      const Matrix next = ops.ladder[i] * suffix;
      h.tensor(depth + 1)(idx) = next.trace();
      moments_rec(ops, next, idx, depth + 1, max_order, h);
    }
  }
}

}  // namespace

MomentHierarchy extract_moments(const Matrix& rho, const OperatorSet& ops, int max_order) {
  if (rho.rows() != ops.dimension() || rho.cols() != ops.dimension()) {
    throw DimensionError("extract_moments: state and operators disagree on the dimension");
  }
  MomentHierarchy h(ops.config.modes, max_order);
  h.tensor(0)(0) = rho.trace();
  if (max_order > 0) moments_rec(ops, rho, 0, 0, max_order, h);
  return h;
}

LeibnizReport leibniz_check(const Matrix& H, std::span<const Matrix> jumps, std::span<const Matrix> factors) {
  if (factors.empty()) throw std::invalid_argument("leibniz_check: no factors");
  const Eigen::Index d = H.rows();
  for (const auto& x : factors) {
    if (x.rows() != d || x.cols() != d) throw DimensionError("leibniz_check: factor shape mismatch");
  }
  for (const auto& c : jumps) {
    if (c.rows() != d || c.cols() != d) throw DimensionError("leibniz_check: jump shape mismatch");
  }
  const std::size_t m = factors.size();
  const auto product = [&](const std::function<Matrix(std::size_t)>& at) {
    Matrix p = Matrix::Identity(d, d);
    for (std::size_t k = 0; k < m; ++k) p = p * at(k);
    return p;
  };
  LeibnizReport report;
  const auto track = [&](const Matrix& t) { report.scale = std::max(report.scale, t.cwiseAbs().maxCoeff()); };

  Matrix lhs = heisenberg_generator(H, jumps, product([&](std::size_t k) { return factors[k]; }));
  track(lhs);
  Matrix rhs = Matrix::Zero(d, d);
  for (std::size_t s = 0; s < m; ++s) {
    const Matrix lx = heisenberg_generator(H, jumps, factors[s]);
    const Matrix t = product([&](std::size_t k) { return k == s ? lx : factors[k]; });
    track(t);
    rhs += t;
  }
  for (const auto& c : jumps) {
    const Matrix cd = c.adjoint();
    for (std::size_t k = 0; k < m; ++k) {
      const Matrix left = cd * factors[k] - factors[k] * cd;
      for (std::size_t l = k + 1; l < m; ++l) {
        const Matrix right = factors[l] * c - c * factors[l];
        const Matrix t = product([&](std::size_t q) { return q == k ? left : (q == l ? right : factors[q]); });
        track(t);
        rhs += t;
      }
    }
  }
  report.residual = (lhs - rhs).cwiseAbs().maxCoeff();
  return report;
}

double leibniz_residual(const Matrix& H, std::span<const Matrix> jumps, std::span<const Matrix> factors) {
  return leibniz_check(H, jumps, factors).residual;
}

namespace {

Matrix product_state(const FockConfig& cfg, const std::function<Matrix(int)>& mode_state) {
  cfg.check();
  Matrix rho = Matrix::Ones(1, 1);
  for (int k = 0; k < cfg.modes; ++k) rho = Eigen::kroneckerProduct(rho, mode_state(k)).eval();
  return rho;
}

}  // namespace

Matrix vacuum_state(const FockConfig& cfg) {
  return product_state(cfg, [&](int) {
    Matrix r = Matrix::Zero(cfg.cutoff, cfg.cutoff);
    r(0, 0) = 1.0;
    return r;
  });
}

Matrix coherent_state(const FockConfig& cfg, const Vector& alpha) {
  if (alpha.size() != cfg.modes) throw DimensionError("coherent_state: one amplitude per mode");
  return product_state(cfg, [&](int k) {
    Vector psi(cfg.cutoff);
    cplx amp = 1.0;
    for (int q = 0; q < cfg.cutoff; ++q) {
      if (q > 0) amp *= alpha(k) / std::sqrt(static_cast<double>(q));
      psi(q) = amp;
    }
    psi.normalize();
    return Matrix(psi * psi.adjoint());
  });
}

Matrix number_state(const FockConfig& cfg, std::span<const int> occupation) {
  if (static_cast<int>(occupation.size()) != cfg.modes) throw DimensionError("number_state: one occupation per mode");
  for (int k : occupation) {
    if (k < 0 || k >= cfg.cutoff) throw ValidationError("number_state: occupation outside the truncated space");
  }
  return product_state(cfg, [&](int k) {
    Matrix r = Matrix::Zero(cfg.cutoff, cfg.cutoff);
    r(occupation[k], occupation[k]) = 1.0;
    return r;
  });
}

Matrix thermal_state(const FockConfig& cfg, const RealVector& nbar) {
  if (nbar.size() != cfg.modes) throw DimensionError("thermal_state: one occupation per mode");
  if ((nbar.array() < 0.0).any()) throw ValidationError("thermal_state: negative occupation");
  return product_state(cfg, [&](int k) {
    const double ratio = nbar(k) / (nbar(k) + 1.0);
    RealVector p(cfg.cutoff);
    for (int q = 0; q < cfg.cutoff; ++q) p(q) = std::pow(ratio, q);
    p /= p.sum();
    return Matrix(p.cast<cplx>().asDiagonal());
  });
}

}  // namespace qmoments
