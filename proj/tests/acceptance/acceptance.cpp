// Acceptance criteria AC-1..AC-10: one pass/fail line per criterion.
#include "qmoments/fock.hpp"
#include "qmoments/moments.hpp"
#include "qmoments/poisson.hpp"
#include "qmoments/propagators.hpp"
#include "qmoments/random.hpp"
#include "qmoments/scenario.hpp"
#include "qmoments/wick.hpp"

#include "oracles.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace qmoments;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

QuadraticGenerator damped(double omega, double kappa) {
  Matrix H(2, 2);
  H << 0, omega, omega, 0;
  Vector g(2);
  g << std::sqrt(kappa), 0;
  return QuadraticGenerator::from_jumps(H, Vector::Zero(2), {g});
}

// Max relative error over orders 1..m along a trajectory.
double trajectory_error(const std::vector<MomentHierarchy>& x, const std::vector<MomentHierarchy>& y, int m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int k = 1; k <= m; ++k) worst = std::max(worst, relative_error(x[i].tensor(k), y[i].tensor(k)));
  }
  return worst;
}

std::vector<MomentHierarchy> closed_form(const QuadraticGenerator& gen, const MomentHierarchy& h0,
                                         const std::vector<double>& grid) {
  const auto bundle = constant_bundle(drift_data(gen), grid);
  std::vector<MomentHierarchy> out;
  for (double t : grid) out.push_back(evolve_hierarchy(h0, bundle, t));
  return out;
}

std::vector<MomentHierarchy> oracle_moments(const MasterTrajectory& traj, const OperatorSet& ops, int m) {
  std::vector<MomentHierarchy> out;
  for (const auto& rho : traj.states) out.push_back(extract_moments(rho, ops, m));
  return out;
}

Outcome ac1() {
  Rng rng(2024);
  std::uniform_int_distribution<int> pick_d(0, 2), pick_m(2, 4), pick_j(0, 3);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int d = 4 + 2 * pick_d(rng), m = pick_m(rng), nj = pick_j(rng);
    const Matrix H = random_hermitian(d, rng);
    std::vector<Matrix> jumps, factors;
    for (int j = 0; j < nj; ++j) jumps.push_back(random_complex_matrix(d, d, rng));
    for (int k = 0; k < m; ++k) factors.push_back(random_complex_matrix(d, d, rng));
    worst = std::max(worst, leibniz_check(H, jumps, factors).relative());
  }
  return {worst < 1e-10, "100 instances, max relative residual " + sci(worst)};
}

Outcome ac2() {
  const FockConfig cfg{1, 20};
  const auto gen = damped(1.0, 0.3);
  const auto ops = build_operators(gen, cfg);
  Vector alpha(1);
  alpha << 0.5;
  const auto grid = time_grid(2.0, 0.1);
  const auto traj = integrate_master(coherent_state(cfg, alpha), ops, grid, 1e-12);
  const auto oracle = oracle_moments(traj, ops, 4);
  const auto engine = closed_form(gen, gaussian_hierarchy(GaussianData::coherent(alpha), 4), grid);
  const double err = trajectory_error(engine, oracle, 4);
  return {err < 1e-6 && !traj.leakage_exceeded,
          std::to_string(grid.size()) + " times, orders 1-4, max rel error " + sci(err) + ", leakage " +
              sci(traj.max_leakage)};
}

Outcome ac3() {
  Rng rng(33);
  const auto passive = random_passive_generator(2, 0, rng, 2.0, 0.0);
  Vector gamma = Vector::Zero(4);
  gamma(0) = 0.5;
  const auto gen = QuadraticGenerator::from_jumps(passive.H, passive.f, {gamma});
  const FockConfig cfg{2, 10};
  const auto ops = build_operators(gen, cfg);
  Vector alpha(2);
  alpha << 0.5, cplx(0.0, 0.3);
  const auto grid = time_grid(2.0, 0.2);
  const auto traj = integrate_master(coherent_state(cfg, alpha), ops, grid, 1e-12);
  const auto oracle = oracle_moments(traj, ops, 3);
  const auto engine = closed_form(gen, gaussian_hierarchy(GaussianData::coherent(alpha), 3), grid);
  const double err = trajectory_error(engine, oracle, 3);
  return {err < 1e-5 && !traj.leakage_exceeded,
          "n=2, cutoff 10, orders 1-3, max rel error " + sci(err) + ", leakage " + sci(traj.max_leakage)};
}

Outcome ac4() {
  Rng rng(44);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const int n = 1 + i % 2;
    const int m = n == 1 ? 4 : 3 + (i / 2) % 2;
    const auto gen = random_generator(n, i % 3, rng, 0.6);
    const auto drift = drift_data(gen);
    const auto h0 = gaussian_hierarchy(random_gaussian(n, rng), m);
    const double t = 1.0;
    const std::vector<double> grid{0.0, t};
    const auto exact = closed_form(gen, h0, grid)[1];
    const Vector y = oracle::odeint_solve(
        [&](double, const Vector& v) {
          return heisenberg_rhs(MomentHierarchy::from_stacked(n, m, v), drift).stacked();
        },
        h0.stacked(), 0.0, t, 1e-13);
    worst = std::max(worst, oracle::hierarchy_relative_error(MomentHierarchy::from_stacked(n, m, y), exact));
  }
  return {worst < 1e-8, "20 generators, max rel deviation " + sci(worst)};
}

Outcome ac5() {
  double worst = 0.0;
  const FockConfig cfg{1, 40};
  const auto ops = build_operators(QuadraticGenerator::trivial(1), cfg);
  Vector alpha(1);
  alpha << cplx(0.4, -0.3);
  RealVector nbar(1);
  nbar << 0.3;
  const std::array<std::pair<GaussianData, Matrix>, 3> cases{
      std::pair{GaussianData::vacuum(1), vacuum_state(cfg)},
      std::pair{GaussianData::coherent(alpha), coherent_state(cfg, alpha)},
      std::pair{GaussianData::thermal(nbar), thermal_state(cfg, nbar)}};
  for (const auto& [g, rho] : cases) {
    const auto wick = gaussian_hierarchy(g, 4);
    const auto fock = extract_moments(rho, ops, 4);
    worst = std::max(worst, oracle::hierarchy_relative_error(wick, fock));
  }
  // three pairings of four slots
  Rng rng(55);
  const Matrix D = random_complex_matrix(4, 4, rng);
  double pairing = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    std::array<int, 4> idx{};
    for (auto& v : idx) v = static_cast<int>(rng() % 4);
    const cplx expect = D(idx[0], idx[1]) * D(idx[2], idx[3]) + D(idx[0], idx[2]) * D(idx[1], idx[3]) +
                        D(idx[0], idx[3]) * D(idx[1], idx[2]);
    pairing = std::max(pairing, std::abs(pairing_sum_D(D, idx) - expect));
  }
  return {worst < 1e-8 && pairing == 0.0,
          "vacuum/coherent/thermal max rel error " + sci(worst) + ", pairing identity defect " + sci(pairing)};
}

Outcome ac6() {
  Rng rng(66);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const int n = 1 + i % 2;
    const auto gen = random_generator(n, 1 + i % 2, rng, 0.6);
    const auto h0 = gaussian_hierarchy(random_gaussian(n, rng), 4);
    const auto traj = closed_form(gen, h0, time_grid(1.0, 0.25));
    for (const auto& h : traj) worst = std::max(worst, gaussianity_residual(h));
  }
  return {worst < 1e-8, "10 generators, orders 3-4, max residual " + sci(worst)};
}

Outcome ac7() {
  const double rate = 0.7;
  const FockConfig cfg{1, 16};
  const auto gen = damped(1.0, 0.3);
  const auto ops = build_operators(gen, cfg);
  const PoissonModel model{{{rate, gen}}, 1.0};
  Vector alpha(1);
  alpha << 0.5;
  const auto grid = time_grid(3.0, 0.25);
  const std::vector<Matrix> maps{poisson_jump_map(ops)};
  const std::vector<double> rates{rate};
  const auto traj = integrate_poisson_master(coherent_state(cfg, alpha), maps, rates, grid, cfg);
  const auto oracle = oracle_moments(traj, ops, 3);
  const auto engine = evolve_poisson(model, gaussian_hierarchy(GaussianData::coherent(alpha), 3), grid);
  const double err = trajectory_error(engine, oracle, 3);
  return {err < 1e-5 && !traj.leakage_exceeded, "cutoff 16, orders 1-3, max rel error " + sci(err)};
}

Outcome ac8() {
  Rng rng(88);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const int n = 1 + i % 2;
    PoissonModel model;
    for (int j = 0; j <= i % 2; ++j) model.processes.push_back({0.3 + 0.5 * j, random_generator(n, 1, rng, 0.5)});
    const auto h0 = gaussian_hierarchy(random_gaussian(n, rng), 2);
    const double t = 0.6, h = 2e-4;
    const std::vector<double> grid{0.0, t - h, t, t + h};
    const auto traj = evolve_poisson(model, h0, grid);
    const Matrix fd = (central_second_moment(traj[3]) - central_second_moment(traj[1])) / (2 * h);
    const Matrix exact = d12_poisson_rhs(traj[2], model);
    worst = std::max(worst, (fd - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff());
  }
  // mean-free, drive-free reduction: rate [G D G^T - D + int_0^1 e^{Bs} Xi e^{B^T s} ds]
  double reduction = 0.0;
  for (int i = 0; i < 3; ++i) {
    auto gen = random_generator(1 + i % 2, 1, rng, 0.6);
    gen.f.setZero();
    auto g = random_gaussian(gen.modes, rng);
    g.mu.setZero();
    const double rate = 0.9;
    const auto drift = drift_data(gen);
    const Matrix G = drift.B.exp();
    const Matrix kernel = oracle::gauss_legendre(
        [&](double s) {
          const Matrix e = (drift.B * s).exp();
          return Matrix(e * drift.Xi * e.transpose());
        },
        0.0, 1.0);
    const Matrix expect = rate * (G * g.D * G.transpose() - g.D + kernel);
    const Matrix got = d12_poisson_rhs(gaussian_hierarchy(g, 2), PoissonModel{{{rate, gen}}, 1.0});
    reduction = std::max(reduction, (got - expect).cwiseAbs().maxCoeff() / expect.cwiseAbs().maxCoeff());
  }
  return {worst < 1e-6 && reduction < 1e-6,
          "10 specs, max rel deviation from finite differences " + sci(worst) + ", closed reduction " + sci(reduction)};
}

Outcome ac9() {
  const double rate = 0.7;
  Matrix H(2, 2);
  H << 0, 1, 1, 0;
  Vector f(2), gamma(2);
  f << 0.5, 0.5;
  gamma << std::sqrt(0.3), 0;
  const auto gen = QuadraticGenerator::from_jumps(H, f, {gamma});
  Vector alpha(1);
  alpha << 0.5;
  const auto h0 = gaussian_hierarchy(GaussianData::coherent(alpha), 3);
  const auto traj = evolve_poisson(PoissonModel{{{rate, gen}}, 1.0}, h0, time_grid(1.0 / rate, 0.25 / rate));
  double peak = 0.0;
  for (const auto& h : traj) peak = std::max(peak, gaussianity_residual(h));
  const double phi = drift_data(gen).phi.norm();
  return {peak > 1e-4 && phi > 0.0, "driven damped oscillator, |phi| = " + sci(phi) + ", max residual " + sci(peak)};
}

Outcome ac10() {
  Rng rng(1010);
  const auto g1 = random_generator(1, 1, rng, 0.6), g2 = random_generator(1, 2, rng, 0.6);
  const double t1 = 0.7;
  const auto schedule = CoefficientSchedule::piecewise({{t1, g1}, {10.0, g2}});
  const auto grid = time_grid(2.0, 0.1);
  const auto d1 = drift_data(g1), d2 = drift_data(g2);
  double bundle_err = 0.0;
  for (auto method : {BundleMethod::Exact, BundleMethod::RungeKutta}) {
    const auto bundle = integrate_bundle(schedule, grid, 1e-12, method);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double t = grid[i];
      Matrix G;
      Vector shift;
      if (t <= t1) {
        G = (d1.B * t).exp();
        shift = G * oracle::psi_by_quadrature(d1.B, d1.phi, t);
      } else {
        const Matrix G1 = (d1.B * t1).exp(), G2 = (d2.B * (t - t1)).exp();
        G = G2 * G1;
        shift = G2 * G1 * oracle::psi_by_quadrature(d1.B, d1.phi, t1) +
                G2 * oracle::psi_by_quadrature(d2.B, d2.phi, t - t1);
      }
      bundle_err = std::max(bundle_err, (bundle.G(i) - G).cwiseAbs().maxCoeff() / G.cwiseAbs().maxCoeff());
      if (t > 0) {
        bundle_err = std::max(bundle_err, (bundle.dressed_psi(i) - shift).cwiseAbs().maxCoeff() /
                                              shift.cwiseAbs().maxCoeff());
      }
    }
  }

  const auto h1 = damped(1.0, 0.3);
  Matrix H2(2, 2);
  H2 << cplx(0.2, 0.1), 1.5, 1.5, cplx(0.2, -0.1);
  Vector f2(2);
  f2 << cplx(0.1, 0.2), cplx(0.1, -0.2);
  Vector gam(2);
  gam << 0.4, 0.0;
  const auto h2 = QuadraticGenerator::from_jumps(H2, f2, {gam});
  const FockConfig cfg{1, 24};
  const std::vector<OperatorSegment> segments{{1.0, build_operators(h1, cfg)}, {0.0, build_operators(h2, cfg)}};
  Vector alpha(1);
  alpha << 0.5;
  const auto times = time_grid(2.0, 0.1);
  const auto traj = integrate_master(coherent_state(cfg, alpha), segments, times, 1e-12);
  const auto oracle = oracle_moments(traj, segments.front().ops, 3);
  const auto bundle = integrate_bundle(CoefficientSchedule::piecewise({{1.0, h1}, {10.0, h2}}), times);
  const auto h0 = gaussian_hierarchy(GaussianData::coherent(alpha), 3);
  std::vector<MomentHierarchy> engine;
  for (double t : times) engine.push_back(evolve_hierarchy(h0, bundle, t));
  const double moment_err = trajectory_error(engine, oracle, 3);
  return {bundle_err < 1e-8 && moment_err < 1e-5 && !traj.leakage_exceeded,
          "bundle vs exponential products " + sci(bundle_err) + ", moments vs two-segment oracle " + sci(moment_err)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC-1  Leibniz identity, random matrices", ac1},
      {"AC-2  damped oscillator vs Fock oracle", ac2},
      {"AC-3  two coupled modes vs Fock oracle", ac3},
      {"AC-4  Heisenberg ODE vs closed form", ac4},
      {"AC-5  Wick moments vs Fock traces", ac5},
      {"AC-6  Gaussian preservation", ac6},
      {"AC-7  Poisson averaging vs Fock oracle", ac7},
      {"AC-8  central second moment derivative", ac8},
      {"AC-9  loss of Gaussianity under jumps", ac9},
      {"AC-10 piecewise-constant coefficients", ac10}};
  const std::array<double, 10> budget{10, 30, 120, 60, 60, 60, 120, 60, 60, 60};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > budget[i]) {
      out.pass = false;
      out.detail += ", over time budget";
    }
    if (!out.pass) ++failed;
    std::printf("%s %s: %s (%.2f s)\n", out.pass ? "PASS" : "FAIL", criteria[i].first, out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
