#pragma once

#include "qmoments/algebra.hpp"
#include "qmoments/defaults.hpp"
#include "qmoments/poisson.hpp"
#include "qmoments/propagators.hpp"
#include "qmoments/wick.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmoments {

/// Malformed configuration: unreadable file, bad JSON, missing or mistyped fields.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RunMode { Engine, Oracle, Poisson, Compare, Leibniz };

struct InitialData {
  enum class Kind { Gaussian, Vacuum, Coherent, Number, Thermal };
  Kind kind = Kind::Vacuum;
  GaussianData gaussian;        // Kind::Gaussian
  Vector alpha;                 // Kind::Coherent
  std::vector<int> occupation;  // Kind::Number
  RealVector nbar;              // Kind::Thermal
};

struct RunSettings {
  RunMode mode = RunMode::Engine;
  int order = 2;
  double t_max = 1.0;
  double dt = 0.1;
  double tol = 0.0;  // 0 picks the mode default (kCompareTolerance, kLeibnizTolerance)
  double tol_ode = defaults::kTolOde;
  int cutoff = defaults::kDefaultCutoff;
  std::uint64_t seed = 0;
  std::string output = "out";
  PoissonSolver solver = PoissonSolver::Auto;
  int instances = defaults::kLeibnizInstances;
};

struct Scenario {
  int modes = 0;
  std::optional<QuadraticGenerator> generator;
  std::vector<CoefficientSchedule::Segment> schedule;  // empty: constant generator
  std::optional<PoissonModel> poisson;
  InitialData initial;
  RunSettings run;
};

struct Overrides {
  std::optional<int> order;
  std::optional<double> t_max, dt, tol;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<RunMode> mode;
};

/// Builds a scenario from JSON text (ParseError on syntax or schema problems).
/// Structural validation of generators happens in validate_scenario.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
void apply_overrides(Scenario& s, const Overrides& o);

/// Throws ValidationError naming the first violated invariant.
void validate_scenario(const Scenario& s);

/// Grid 0, dt, 2 dt, ..., ending exactly at t_max.
std::vector<double> time_grid(double t_max, double dt);

/// Normwise relative error max|x - y| / max|y| (absolute when max|y| < 1e-12).
double relative_error(const Vector& x, const Vector& y);

/// Exit statuses of run_scenario.
enum ExitCode : int { kExitOk = 0, kExitCompareFailed = 1, kExitParse = 2, kExitValidation = 3, kExitLeakage = 4 };

/// Runs the scenario's mode, writes CSV/report files into run.output and a
/// summary to `log`. Returns an ExitCode; validation problems are thrown.
int run_scenario(const Scenario& s, std::ostream& log);

const char* mode_name(RunMode m);

}  // namespace qmoments
