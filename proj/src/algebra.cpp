#include "qmoments/algebra.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <sstream>

namespace qmoments {

namespace {

int modes_of(Eigen::Index size, const char* what) {
  if (size <= 0 || size % 2 != 0) {
    throw DimensionError(std::string(what) + ": phase-space size must be a positive even number, got " +
                         std::to_string(size));
  }
  return static_cast<int>(size / 2);
}

double scale_of(const Matrix& m) { return std::max(1.0, m.cwiseAbs().maxCoeff()); }
double scale_of(const Vector& v) { return v.size() == 0 ? 1.0 : std::max(1.0, v.cwiseAbs().maxCoeff()); }

}  // namespace

StructuralMatrices structural_matrices(int modes) {
  if (modes < 1) throw DimensionError("structural_matrices: mode count must be >= 1");
  const Eigen::Index n = modes;
  StructuralMatrices s{Matrix::Zero(2 * n, 2 * n), Matrix::Zero(2 * n, 2 * n)};
  s.J.topRightCorner(n, n) = -Matrix::Identity(n, n);
  s.J.bottomLeftCorner(n, n) = Matrix::Identity(n, n);
  s.E.topRightCorner(n, n) = Matrix::Identity(n, n);
  s.E.bottomLeftCorner(n, n) = Matrix::Identity(n, n);
  return s;
}

Vector tilde_vec(const Vector& g) {
  const Eigen::Index n = modes_of(g.size(), "tilde_vec");
  Vector out(2 * n);
  out.head(n) = g.tail(n).conjugate();
  out.tail(n) = g.head(n).conjugate();
  return out;
}

Matrix tilde_mat(const Matrix& k) {
  if (k.rows() != k.cols()) throw DimensionError("tilde_mat: matrix must be square");
  const Eigen::Index n = modes_of(k.rows(), "tilde_mat");
  Matrix out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = k.bottomRightCorner(n, n).conjugate();
  out.topRightCorner(n, n) = k.bottomLeftCorner(n, n).conjugate();
  out.bottomLeftCorner(n, n) = k.topRightCorner(n, n).conjugate();
  out.bottomRightCorner(n, n) = k.topLeftCorner(n, n).conjugate();
  return out;
}

Matrix gamma_from_jumps(int modes, std::span<const Vector> jumps) {
  if (modes < 1) throw DimensionError("gamma_from_jumps: mode count must be >= 1");
  Matrix gamma = Matrix::Zero(2 * modes, 2 * modes);
  for (const auto& g : jumps) {
    if (g.size() != 2 * modes) {
      throw DimensionError("gamma_from_jumps: jump vector of length " + std::to_string(g.size()) +
                           ", expected " + std::to_string(2 * modes));
    }
    gamma += g * tilde_vec(g).transpose();
  }
  return gamma;
}

namespace {

void check_shapes(const Matrix& H, const Vector& f, int* modes_out) {
  if (H.rows() != H.cols()) throw DimensionError("generator: H must be square");
  const int modes = modes_of(H.rows(), "generator");
  if (f.size() != H.rows()) {
    throw DimensionError("generator: f has length " + std::to_string(f.size()) + ", expected " +
                         std::to_string(H.rows()));
  }
  *modes_out = modes;
}

}  // namespace

QuadraticGenerator QuadraticGenerator::from_jumps(Matrix H, Vector f, std::vector<Vector> jumps) {
  QuadraticGenerator gen;
  check_shapes(H, f, &gen.modes);
  gen.Gamma = gamma_from_jumps(gen.modes, jumps);
  gen.H = std::move(H);
  gen.f = std::move(f);
  gen.jumps = std::move(jumps);
  return gen;
}

QuadraticGenerator QuadraticGenerator::from_gamma(Matrix H, Vector f, Matrix Gamma) {
  QuadraticGenerator gen;
  check_shapes(H, f, &gen.modes);
  if (Gamma.rows() != H.rows() || Gamma.cols() != H.cols()) {
    throw DimensionError("generator: Gamma must have the same shape as H");
  }
  gen.H = std::move(H);
  gen.f = std::move(f);
  gen.Gamma = std::move(Gamma);
  return gen;
}

QuadraticGenerator QuadraticGenerator::trivial(int modes) {
  if (modes < 1) throw DimensionError("generator: mode count must be >= 1");
  return from_gamma(Matrix::Zero(2 * modes, 2 * modes), Vector::Zero(2 * modes),
                    Matrix::Zero(2 * modes, 2 * modes));
}

std::string ValidationReport::describe() const {
  if (ok()) return "valid";
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << "violated " << violations[i].invariant << " (max violation " << violations[i].magnitude << ")";
  }
  return out.str();
}

ValidationReport validate_generator(const QuadraticGenerator& gen, double tol_struct) {
  ValidationReport report;
  const Eigen::Index d = 2 * static_cast<Eigen::Index>(gen.modes);
  if (gen.modes < 1 || gen.H.rows() != d || gen.H.cols() != d || gen.f.size() != d || gen.Gamma.rows() != d ||
      gen.Gamma.cols() != d) {
    report.violations.push_back({"shape: H, Gamma are 2n x 2n and f has length 2n", 1.0});
    return report;
  }
  auto check = [&](const std::string& name, double violation, double scale) {
    if (violation > tol_struct * scale) report.violations.push_back({name, violation});
  };

  const double h_scale = scale_of(gen.H);
  check("H = H^T", (gen.H - gen.H.transpose()).cwiseAbs().maxCoeff(), h_scale);
  check("H~ = H", (tilde_mat(gen.H) - gen.H).cwiseAbs().maxCoeff(), h_scale);
  check("f~ = f", (tilde_vec(gen.f) - gen.f).cwiseAbs().maxCoeff(), scale_of(gen.f));

  const double g_scale = scale_of(gen.Gamma);
  if (!gen.jumps.empty()) {
    bool shapes_ok = std::all_of(gen.jumps.begin(), gen.jumps.end(), [d](const Vector& g) { return g.size() == d; });
    if (!shapes_ok) {
      report.violations.push_back({"jump vectors have length 2n", 1.0});
      return report;
    }
    check("Gamma = sum_j gamma_j gamma~_j^T",
          (gamma_from_jumps(gen.modes, gen.jumps) - gen.Gamma).cwiseAbs().maxCoeff(), g_scale);
  }
  check("Gamma~ = Gamma^T", (tilde_mat(gen.Gamma) - gen.Gamma.transpose()).cwiseAbs().maxCoeff(), g_scale);

  const Matrix gamma_e = gen.Gamma * structural_matrices(gen.modes).E;
  const double herm = (gamma_e - gamma_e.adjoint()).cwiseAbs().maxCoeff();
  check("Gamma E hermitian", herm, g_scale);
  const Matrix herm_part = (gamma_e + gamma_e.adjoint()) / 2.0;
  const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(herm_part, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  check("Gamma E positive semidefinite", std::max(0.0, -min_eig), g_scale);
  return report;
}

void require_valid(const QuadraticGenerator& gen, double tol_struct) {
  const auto report = validate_generator(gen, tol_struct);
  if (!report.ok()) throw ValidationError("invalid quadratic generator: " + report.describe());
}

}  // namespace qmoments
