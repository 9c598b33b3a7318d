#include "qmoments/random.hpp"

#include "qmoments/linalg.hpp"
#include "qmoments/propagators.hpp"

#include <cmath>

namespace qmoments {

Matrix random_complex_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = normal(rng);
      m(r, c) = cplx(re, normal(rng));
    }
  }
  return m;
}

Vector random_complex_vector(Eigen::Index size, Rng& rng) { return random_complex_matrix(size, 1, rng).col(0); }

Matrix random_hermitian(Eigen::Index size, Rng& rng) {
  const Matrix m = random_complex_matrix(size, size, rng);
  return (m + m.adjoint()) / 2.0;
}

namespace {

std::vector<Vector> random_jumps(int modes, int count, Rng& rng, double scale) {
  std::vector<Vector> out;
  for (int j = 0; j < count; ++j) out.push_back(scale * random_complex_vector(2 * modes, rng));
  return out;
}

}  // namespace

QuadraticGenerator random_generator(int modes, int jumps, Rng& rng, double scale) {
  const int d = 2 * modes;
  const Matrix m = random_complex_matrix(d, d, rng);
  const Matrix sym = (m + m.transpose()) / 2.0;
  const Matrix H = scale * (sym + tilde_mat(sym)) / 2.0;
  const Vector g = random_complex_vector(d, rng);
  const Vector f = scale * (g + tilde_vec(g)) / 2.0;
  return QuadraticGenerator::from_jumps(H, f, random_jumps(modes, jumps, rng, scale));
}

QuadraticGenerator random_passive_generator(int modes, int jumps, Rng& rng, double norm, double squeeze,
                                            double jump_scale) {
  const int n = modes;
  const Matrix h = random_hermitian(n, rng);
  const Matrix s0 = random_complex_matrix(n, n, rng);
  const Matrix s = squeeze * (s0 + s0.transpose()) / 2.0;
  Matrix H = Matrix::Zero(2 * n, 2 * n);
  H.topRightCorner(n, n) = h.transpose();
  H.bottomLeftCorner(n, n) = h;
  H.topLeftCorner(n, n) = s;
  H.bottomRightCorner(n, n) = s.conjugate();
  const Eigen::JacobiSVD<Matrix> svd(H);
  H *= norm / svd.singularValues()(0);
  return QuadraticGenerator::from_jumps(H, Vector::Zero(2 * n), random_jumps(modes, jumps, rng, jump_scale));
}

GaussianData random_gaussian(int modes, Rng& rng, double amplitude) {
  std::uniform_real_distribution<double> occ(0.0, 0.5);
  RealVector nbar(modes);
  for (int k = 0; k < modes; ++k) nbar(k) = occ(rng);
  GaussianData g = GaussianData::thermal(nbar);
  QuadraticGenerator rot = random_generator(modes, 0, rng, 0.5);
  rot.f.setZero();
  const Matrix G = propagator_constant(drift_data(rot).B, 1.0);
  g.D = G * g.D * G.transpose();
  const Vector alpha = amplitude * random_complex_vector(modes, rng);
  g.mu << alpha, alpha.conjugate();
  return g;
}

}  // namespace qmoments
