#include "qmoments/wick.hpp"

#include <array>
#include <bit>
#include <stdexcept>

namespace qmoments {

GaussianData GaussianData::vacuum(int modes) {
  if (modes < 1) throw DimensionError("GaussianData: mode count must be >= 1");
  GaussianData g{Vector::Zero(2 * modes), Matrix::Zero(2 * modes, 2 * modes)};
  // <a_k a_k^dag> = 1, every other central moment vanishes.
  g.D.topRightCorner(modes, modes).setIdentity();
  return g;
}

GaussianData GaussianData::coherent(const Vector& alpha) {
  GaussianData g = vacuum(static_cast<int>(alpha.size()));
  g.mu << alpha, alpha.conjugate();
  return g;
}

GaussianData GaussianData::thermal(const RealVector& nbar) {
  const auto n = nbar.size();
  GaussianData g = vacuum(static_cast<int>(n));
  for (Eigen::Index k = 0; k < n; ++k) {
    g.D(k, n + k) = nbar(k) + 1.0;
    g.D(n + k, k) = nbar(k);
  }
  return g;
}

ValidationReport validate_gaussian(const GaussianData& g, double tol_struct) {
  ValidationReport report;
  const Eigen::Index d = g.mu.size();
  if (d == 0 || d % 2 != 0 || g.D.rows() != d || g.D.cols() != d) {
    report.violations.push_back({"shape: mu has length 2n and D is 2n x 2n", 1.0});
    return report;
  }
  const Matrix J = structural_matrices(static_cast<int>(d / 2)).J;
  const double scale = std::max(1.0, g.D.cwiseAbs().maxCoeff());
  const double ccr = (g.D - g.D.transpose() + J).cwiseAbs().maxCoeff();
  if (ccr > tol_struct * scale) report.violations.push_back({"D - D^T = -J", ccr});
  const double real = (tilde_vec(g.mu) - g.mu).cwiseAbs().maxCoeff();
  if (real > tol_struct * std::max(1.0, g.mu.cwiseAbs().maxCoeff())) report.violations.push_back({"mu~ = mu", real});
  return report;
}

namespace {

cplx pairing_rec(const Matrix& D, const int* idx, std::array<bool, 2 * defaults::kMaxOrder>& used, int count,
                 int remaining) {
  if (remaining == 0) return 1.0;
  int first = 0;
  while (used[first]) ++first;
  used[first] = true;
  cplx acc = 0.0;
  for (int j = first + 1; j < count; ++j) {
    if (used[j]) continue;
    const cplx d = D(idx[first], idx[j]);
    if (d == 0.0) continue;
    used[j] = true;
    acc += d * pairing_rec(D, idx, used, count, remaining - 2);
    used[j] = false;
  }
  used[first] = false;
  return acc;
}

MomentHierarchy wick_moments(const Vector& mu, const Matrix& D, int max_order) {
  const int d = static_cast<int>(mu.size());
  MomentHierarchy h(d / 2, max_order);
  std::array<int, defaults::kMaxOrder> digits{}, paired{};
  for (int k = 1; k <= max_order; ++k) {
    Vector& tk = h.tensor(k);
    for (Eigen::Index flat = 0; flat < tk.size(); ++flat) {
      decode_index(flat, d, k, digits);
      cplx acc = 0.0;
      // Slots in `mask` take a mean factor; the rest are paired through D.
      for (unsigned mask = 0; mask < (1u << k); ++mask) {
        const int mean_slots = std::popcount(mask);
        if ((k - mean_slots) % 2 != 0) continue;
        cplx mean_part = 1.0;
        int np = 0;
        for (int s = 0; s < k; ++s) {
          if (mask & (1u << s)) mean_part *= mu(digits[s]);
          else paired[np++] = digits[s];
        }
        if (mean_part == 0.0) continue;
        acc += mean_part * pairing_sum_D(D, std::span<const int>(paired.data(), np));
      }
      tk(flat) = acc;
    }
  }
  return h;
}

}  // namespace

cplx pairing_sum_D(const Matrix& D, std::span<const int> index) {
  if (index.size() % 2 != 0) return 0.0;
  if (index.empty()) return 1.0;
  if (index.size() > 2 * defaults::kMaxOrder) throw BudgetError("pairing_sum_D: too many slots");
  for (int i : index) {
    if (i < 0 || i >= D.rows()) throw DimensionError("pairing_sum_D: phase index out of range");
  }
  std::array<bool, 2 * defaults::kMaxOrder> used{};
  const int count = static_cast<int>(index.size());
  return pairing_rec(D, index.data(), used, count, count);
}

MomentHierarchy gaussian_hierarchy(const GaussianData& g, int max_order, double tol_struct) {
  const auto report = validate_gaussian(g, tol_struct);
  for (const auto& v : report.violations) {
    if (v.invariant != "mu~ = mu") throw ValidationError("invalid Gaussian data: " + report.describe());
  }
  return wick_moments(g.mu, g.D, max_order);
}

double gaussianity_residual(const MomentHierarchy& h) {
  if (h.max_order() < 3) throw std::invalid_argument("gaussianity_residual: hierarchy order must be >= 3");
  const MomentHierarchy ref = wick_moments(h.first_moments(), central_second_moment(h), h.max_order());
  double r = 0.0;
  for (int k = 3; k <= h.max_order(); ++k) r = std::max(r, (h.tensor(k) - ref.tensor(k)).cwiseAbs().maxCoeff());
  return r;
}

}  // namespace qmoments
