#include "qmoments/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>

namespace qmoments {

Matrix expm(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("expm: matrix must be square");
  if (a.size() == 0) return a;
  return a.exp();
}

double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("spectral_radius: matrix must be square");
  if (a.size() == 0) return 0.0;
  Eigen::ComplexEigenSolver<Matrix> solver(a, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

double error_norm(const Vector& err, const Vector& y, const Vector& y_new, const OdeOptions& opt) {
  if (err.size() == 0) return 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
    const double r = std::abs(err[i]) / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

class Dopri5 {
 public:
  Dopri5(const OdeRhs& rhs, const OdeOptions& opt, OdeStats& stats) : rhs_(rhs), opt_(opt), stats_(stats) {}

  // Advances y from t0 to t1 in place.
  void advance(Vector& y, double t0, double t1) {
    if (t1 == t0) return;
    const Eigen::Index n = y.size();
    k1_.resize(n);
    eval(t0, y, k1_);
    double t = t0;
    double h = h_ > 0.0 ? h_ : initial_step(t0, y, t1 - t0);
    long steps = 0;
    while (t < t1) {
      if (++steps > opt_.max_steps) throw std::runtime_error("integrate_ode: step budget exhausted");
      const bool last = t + 1.01 * h >= t1;
      const double hs = last ? t1 - t : h;
      const Vector& y0 = y;
      tmp_ = y0 + hs * a21 * k1_;
      eval(t + c2 * hs, tmp_, k2_);
      tmp_ = y0 + hs * (a31 * k1_ + a32 * k2_);
      eval(t + c3 * hs, tmp_, k3_);
      tmp_ = y0 + hs * (a41 * k1_ + a42 * k2_ + a43 * k3_);
      eval(t + c4 * hs, tmp_, k4_);
      tmp_ = y0 + hs * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
      eval(t + c5 * hs, tmp_, k5_);
      tmp_ = y0 + hs * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
      eval(t + hs, tmp_, k6_);
      y_new_ = y0 + hs * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
      eval(t + hs, y_new_, k7_);
      err_ = hs * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
      const double en = error_norm(err_, y0, y_new_, opt_);
      if (en <= 1.0) {
        ++stats_.accepted;
        t = last ? t1 : t + hs;
        y.swap(y_new_);
        k1_.swap(k7_);
        const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
        h = last ? std::max(h, hs * fac) : hs * fac;
      } else {
        ++stats_.rejected;
        h = std::isfinite(en) ? hs * std::max(0.2, 0.9 * std::pow(en, -0.2)) : 0.2 * hs;
        if (h < 1e-15 * std::max(1.0, std::abs(t))) throw std::runtime_error("integrate_ode: step size underflow");
      }
    }
    h_ = h;
  }

 private:
  void eval(double t, const Vector& y, Vector& dy) {
    dy.resize(y.size());
    rhs_(t, y, dy);
    ++stats_.evaluations;
  }

  double initial_step(double t0, const Vector& y0, double span) {
    if (opt_.initial_step > 0.0) return std::min(opt_.initial_step, span);
    auto scaled = [&](const Vector& v) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double sc = opt_.atol + opt_.rtol * std::abs(y0[i]);
        acc += std::norm(v[i]) / (sc * sc);
      }
      return v.size() ? std::sqrt(acc / static_cast<double>(v.size())) : 0.0;
    };
    const double d0 = scaled(y0), d1 = scaled(k1_);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    tmp_ = y0 + h0 * k1_;
    Vector k(y0.size());
    eval(t0 + h0, tmp_, k);
    const double d2 = scaled(k - k1_) / h0;
    const double m = std::max(d1, d2);
    const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    return std::min({100.0 * h0, h1, span});
  }

  const OdeRhs& rhs_;
  const OdeOptions& opt_;
  OdeStats& stats_;
  double h_ = 0.0;
  Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, y_new_, err_;
};

}  // namespace

std::vector<Vector> integrate_ode(const OdeRhs& rhs, const Vector& y0, std::span<const double> times,
                                  const OdeOptions& options, OdeStats* stats) {
  std::vector<Vector> out;
  if (times.empty()) return out;
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] >= times[i - 1])) throw std::invalid_argument("integrate_ode: times must be non-decreasing");
  }
  OdeStats local;
  Dopri5 stepper(rhs, options, stats ? *stats : local);
  Vector y = y0;
  out.reserve(times.size());
  out.push_back(y);
  for (std::size_t i = 1; i < times.size(); ++i) {
    stepper.advance(y, times[i - 1], times[i]);
    out.push_back(y);
  }
  return out;
}

Vector integrate_ode(const OdeRhs& rhs, const Vector& y0, double t0, double t1, const OdeOptions& options,
                     OdeStats* stats) {
  const std::array<double, 2> times{t0, t1};
  return integrate_ode(rhs, y0, times, options, stats).back();
}

namespace {

constexpr std::array<double, 8> kXgk = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b;
  Vector value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel gk15(const VectorIntegrand& f, double a, double b) {
  const double center = 0.5 * (a + b), half = 0.5 * (b - a);
  Vector fc = f(center);
  Vector kronrod = kWgk[7] * fc;
  Vector gauss = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    Vector sum = f(center - dx) + f(center + dx);
    kronrod += kWgk[j] * sum;
    if (j % 2 == 1) gauss += kWg[j / 2] * sum;
  }
  kronrod *= half;
  gauss *= half;
  const double err = (kronrod - gauss).cwiseAbs().maxCoeff();
  return {a, b, std::move(kronrod), err};
}

}  // namespace

QuadratureResult integrate_gk15(const VectorIntegrand& f, double a, double b, double rel_tol, double abs_tol,
                                int max_intervals) {
  QuadratureResult result;
  if (a == b) {
    Vector probe = f(a);
    result.value = Vector::Zero(probe.size());
    return result;
  }
  std::priority_queue<Panel> panels;
  Panel first = gk15(f, a, b);
  Vector total = first.value;
  double total_err = first.error;
  panels.push(std::move(first));
  int count = 1;
  while (count < max_intervals) {
    const double target = std::max(abs_tol, rel_tol * total.cwiseAbs().maxCoeff());
    if (total_err <= target) break;
    Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Panel left = gk15(f, worst.a, mid);
    Panel right = gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    panels.push(std::move(left));
    panels.push(std::move(right));
    ++count;
  }
  // Re-sum to shed accumulated cancellation from the running updates.
  result.value = Vector::Zero(total.size());
  result.error = 0.0;
  while (!panels.empty()) {
    result.value += panels.top().value;
    result.error += panels.top().error;
    panels.pop();
  }
  result.intervals = count;
  return result;
}

}  // namespace qmoments
