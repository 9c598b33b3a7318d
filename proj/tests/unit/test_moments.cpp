#include "qmoments/moments.hpp"
#include "qmoments/random.hpp"
#include "qmoments/wick.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <numeric>

using namespace qmoments;

namespace {

MomentHierarchy random_hierarchy(int n, int m, Rng& rng) {
  MomentHierarchy h(n, m);
  for (int k = 1; k <= m; ++k) h.tensor(k) = random_complex_vector(h.tensor(k).size(), rng);
  return h;
}

// Tensor with its slots permuted: out[i_0..i_{k-1}] = in[i_{perm[0]}..i_{perm[k-1]}].
Vector permute_slots(const Vector& t, int d, int k, const std::vector<int>& perm) {
  Vector out(t.size());
  std::vector<int> digits(k), src(k);
  for (Eigen::Index flat = 0; flat < t.size(); ++flat) {
    decode_index(flat, d, k, digits);
    for (int s = 0; s < k; ++s) src[s] = digits[perm[s]];
    out(flat) = t(encode_index(src, d));
  }
  return out;
}

}  // namespace

TEST_CASE("hierarchy layout, indexing and stacking") {
  MomentHierarchy h(2, 3);
  CHECK(h.phase_dim() == 4);
  CHECK(h.tensor(0)(0) == cplx(1.0));
  CHECK(h.tensor(3).size() == 64);
  CHECK(h.stacked_size() == 1 + 4 + 16 + 64);
  CHECK(h.stacked_offset(2) == 5);
  const std::vector<int> idx{3, 0, 2};
  CHECK(encode_index(idx, 4) == 3 * 16 + 0 * 4 + 2);
  std::vector<int> back(3);
  decode_index(encode_index(idx, 4), 4, 3, back);
  CHECK(back == idx);
  h(idx) = cplx(2.0, -1.0);
  CHECK(h.tensor(3)(50) == cplx(2.0, -1.0));

  Rng rng(30);
  const auto r = random_hierarchy(2, 3, rng);
  const auto again = MomentHierarchy::from_stacked(2, 3, r.stacked());
  CHECK(max_abs_difference(r, again) == 0.0);
  const auto low = r.truncated(2);
  CHECK(low.max_order() == 2);
  CHECK((low.tensor(2) - r.tensor(2)).norm() == 0.0);
  CHECK_THROWS_AS(MomentHierarchy(1, 9), BudgetError);
}

TEST_CASE("first and second moments as vector and matrix") {
  Rng rng(31);
  const auto h = random_hierarchy(1, 2, rng);
  const std::vector<int> i01{0, 1};
  CHECK(h.second_moments()(0, 1) == h(i01));
  const Matrix D = central_second_moment(h);
  const Vector mu = h.first_moments();
  CHECK(std::abs(D(0, 1) - (h(i01) - mu(0) * mu(1))) < 1e-15);
  CHECK_THROWS_AS(central_second_moment(MomentHierarchy(1, 1)), std::invalid_argument);
}

TEST_CASE("slotwise application equals the explicit Kronecker power") {
  Rng rng(32);
  const Matrix g = random_complex_matrix(4, 4, rng);
  const auto h = random_hierarchy(2, 3, rng);
  const auto out = apply_slotwise(g, h);
  for (int k = 0; k <= 3; ++k) {
    const Vector expect = oracle::kron_power(g, k) * h.tensor(k);
    CHECK((out.tensor(k) - expect).norm() < 1e-12 * (1.0 + expect.norm()));
  }
  // A single slot: G acting on slot 1 of an order-3 tensor is I (x) G (x) I.
  const Matrix one = Eigen::kroneckerProduct(Eigen::kroneckerProduct(Matrix::Identity(4, 4), g).eval(),
                                             Matrix::Identity(4, 4))
                         .eval();
  CHECK((apply_to_slot(g, h.tensor(3), 3, 1) - one * h.tensor(3)).norm() < 1e-12 * h.tensor(3).norm());
}

TEST_CASE("regrouped partition sum equals the literal term-by-term sum") {
  Rng rng(33);
  for (int n = 1; n <= 2; ++n) {
    const int m = n == 1 ? 5 : 4;
    const auto h = random_hierarchy(n, m, rng);
    const Vector psi = random_complex_vector(2 * n, rng);
    const Matrix beta = random_complex_matrix(2 * n, 2 * n, rng);
    for (bool exclude : {false, true}) {
      const auto fast = partition_sum(h, psi, beta, exclude);
      const auto slow = oracle::literal_partition_sum(h, psi, beta, exclude);
      CHECK(max_abs_difference(fast, slow) < 1e-12 * (1.0 + slow.stacked().cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("drive-noise tensors are the partition sum of the unit hierarchy") {
  Rng rng(34);
  const Vector psi = random_complex_vector(4, rng);
  const Matrix beta = random_complex_matrix(4, 4, rng);
  const auto w = drive_noise_tensors(psi, beta, 4);
  MomentHierarchy unit(2, 4);
  for (int k = 1; k <= 4; ++k) unit.tensor(k).setZero();
  const auto ref = oracle::literal_partition_sum(unit, psi, beta);
  for (int k = 0; k <= 4; ++k) CHECK((w[k] - ref.tensor(k)).norm() < 1e-12 * (1.0 + ref.tensor(k).norm()));
}

TEST_CASE("Heisenberg right-hand side at orders one and two") {
  Rng rng(35);
  const auto gen = random_generator(2, 2, rng);
  const auto d = drift_data(gen);
  const auto h = random_hierarchy(2, 2, rng);
  const auto rhs = heisenberg_rhs(h, d);
  CHECK(rhs.tensor(0)(0) == cplx(0.0));
  const Vector mu = h.first_moments();
  CHECK((rhs.tensor(1) - (d.B * mu + d.phi)).norm() < 1e-12);
  const Matrix T2 = h.second_moments();
  const Matrix expect = d.B * T2 + T2 * d.B.transpose() + d.phi * mu.transpose() + mu * d.phi.transpose() + d.Xi;
  CHECK((rhs.second_moments() - expect).norm() < 1e-12 * expect.norm());

  const DriftData zero{Matrix::Zero(4, 4), Vector::Zero(4), Matrix::Zero(4, 4)};
  const auto z = heisenberg_rhs(random_hierarchy(2, 3, rng), zero);
  CHECK(z.stacked().norm() == 0.0);
}

TEST_CASE("closed-form evolution at low orders") {
  Rng rng(36);
  const auto gen = random_generator(2, 2, rng, 0.6);
  const auto d = drift_data(gen);
  const std::vector<double> grid{0.0, 0.7};
  const auto bundle = constant_bundle(d, grid);
  const auto h0 = random_hierarchy(2, 3, rng);
  const auto h = evolve_hierarchy(h0, bundle, 0.7);
  const Matrix G = bundle.G(1);
  CHECK((h.first_moments() - G * (h0.first_moments() + bundle.psi(1))).norm() < 1e-12 * h.first_moments().norm());
  const Matrix D = central_second_moment(h);
  const Matrix expect = G * (central_second_moment(h0) + bundle.beta(1)) * G.transpose();
  CHECK((D - expect).norm() < 1e-11 * expect.norm());
  CHECK(max_abs_difference(evolve_hierarchy(h0, bundle, 0.0), h0) == 0.0);
  CHECK_THROWS_AS(evolve_hierarchy(h0, bundle, 0.5), std::out_of_range);
}

TEST_CASE("closed-form evolution solves the Heisenberg equations") {
  Rng rng(37);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 1 + trial % 2, m = 4;
    const auto gen = random_generator(n, 2, rng, 0.5);
    const auto d = drift_data(gen);
    const auto h0 = gaussian_hierarchy(random_gaussian(n, rng), m);
    const std::vector<double> grid{0.0, 1.0};
    const auto closed = evolve_hierarchy(h0, constant_bundle(d, grid), 1.0);
    const Vector y = oracle::odeint_solve(
        [&](double, const Vector& v) { return heisenberg_rhs(MomentHierarchy::from_stacked(n, m, v), d).stacked(); },
        h0.stacked(), 0.0, 1.0);
    CHECK(oracle::hierarchy_relative_error(closed, MomentHierarchy::from_stacked(n, m, y)) < 1e-9);
  }
}

TEST_CASE("commutation relations are preserved along the evolution") {
  Rng rng(38);
  const auto gen = random_generator(2, 2, rng, 0.6);
  const std::vector<double> grid{0.0, 0.4, 1.3};
  const auto bundle = constant_bundle(drift_data(gen), grid);
  const auto h0 = gaussian_hierarchy(random_gaussian(2, rng), 2);
  const Matrix J = structural_matrices(2).J;
  for (double t : grid) {
    const Matrix T2 = evolve_hierarchy(h0, bundle, t).second_moments();
    CHECK((T2 - T2.transpose() + J).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("moments of reversed conjugate strings are complex conjugates") {
  Rng rng(39);
  const auto gen = random_generator(1, 1, rng, 0.6);
  const std::vector<double> grid{0.0, 0.9};
  const auto h = evolve_hierarchy(gaussian_hierarchy(random_gaussian(1, rng), 4), constant_bundle(drift_data(gen), grid), 0.9);
  for (int k = 1; k <= 4; ++k) {
    std::vector<int> digits(k), mirror(k);
    for (Eigen::Index flat = 0; flat < h.tensor(k).size(); ++flat) {
      decode_index(flat, 2, k, digits);
      for (int s = 0; s < k; ++s) mirror[s] = conjugate_index(digits[k - 1 - s], 1);
      CHECK(std::abs(h.tensor(k)(encode_index(mirror, 2)) - std::conj(h.tensor(k)(flat))) < 1e-12);
    }
  }
}

TEST_CASE("slot permutations commute with evolution when the noise kernel is symmetric") {
  // Hermitian jump operators give a symmetric Gamma, hence a symmetric pair kernel.
  Rng rng(40);
  const Matrix h = random_hermitian(1, rng);
  Matrix H = Matrix::Zero(2, 2);
  H(0, 1) = H(1, 0) = h(0, 0);
  Vector gamma(2);
  gamma << 0.4, 0.4;
  Vector f(2);
  f << cplx(0.2, 0.1), cplx(0.2, -0.1);
  const auto gen = QuadraticGenerator::from_jumps(H, f, {gamma});
  const std::vector<double> grid{0.0, 0.8};
  const auto bundle = constant_bundle(drift_data(gen), grid);
  CHECK((bundle.beta(1) - bundle.beta(1).transpose()).norm() < 1e-12);
  // Lower orders symmetric so only the order-3 slot labels carry information.
  auto h0 = random_hierarchy(1, 3, rng);
  h0.tensor(2) = (h0.tensor(2) + permute_slots(h0.tensor(2), 2, 2, {1, 0})) / 2.0;
  const std::vector<int> perm{2, 0, 1};
  MomentHierarchy p0 = h0;
  p0.tensor(3) = permute_slots(h0.tensor(3), 2, 3, perm);
  const auto a = evolve_hierarchy(p0, bundle, 0.8);
  const auto b = evolve_hierarchy(h0, bundle, 0.8);
  CHECK((a.tensor(3) - permute_slots(b.tensor(3), 2, 3, perm)).norm() < 1e-12 * a.tensor(3).norm());
}
