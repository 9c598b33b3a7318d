#include "qmoments/scenario.hpp"

#include "qmoments/fock.hpp"
#include "qmoments/hierarchy_io.hpp"
#include "qmoments/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace qmoments {

using nlohmann::json;

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::Engine: return "engine";
    case RunMode::Oracle: return "oracle";
    case RunMode::Poisson: return "poisson";
    case RunMode::Compare: return "compare";
    case RunMode::Leibniz: return "leibniz";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------------------
// JSON decoding

cplx parse_complex(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ParseError(where + ": expected a number or a [re, im] pair");
}

Vector parse_vector(const json& j, Eigen::Index size, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw ParseError(where + ": expected an array of length " + std::to_string(size));
  }
  Vector v(size);
  for (Eigen::Index k = 0; k < size; ++k) v(k) = parse_complex(j[k], where);
  return v;
}

Matrix parse_matrix(const json& j, Eigen::Index size, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw ParseError(where + ": expected " + std::to_string(size) + " rows");
  }
  Matrix m(size, size);
  for (Eigen::Index r = 0; r < size; ++r) m.row(r) = parse_vector(j[r], size, where).transpose();
  return m;
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  return j.at(key);
}

QuadraticGenerator parse_generator(const json& j, const std::string& where) {
  const int n = require(j, "n", where).get<int>();
  if (n < 1) throw ParseError(where + ": n must be >= 1");
  const int d = 2 * n;
  Matrix H = parse_matrix(require(j, "H", where), d, where + ".H");
  Vector f = j.contains("f") ? parse_vector(j.at("f"), d, where + ".f") : Vector::Zero(d);
  if (j.contains("jumps") && j.contains("Gamma")) throw ParseError(where + ": give either 'jumps' or 'Gamma', not both");
  if (j.contains("Gamma")) return QuadraticGenerator::from_gamma(H, f, parse_matrix(j.at("Gamma"), d, where + ".Gamma"));
  std::vector<Vector> jumps;
  if (j.contains("jumps")) {
    if (!j.at("jumps").is_array()) throw ParseError(where + ".jumps: expected an array");
    for (const auto& g : j.at("jumps")) jumps.push_back(parse_vector(g, d, where + ".jumps"));
  }
  return QuadraticGenerator::from_jumps(H, f, std::move(jumps));
}

RunMode parse_mode(const std::string& s) {
  if (s == "engine") return RunMode::Engine;
  if (s == "oracle") return RunMode::Oracle;
  if (s == "poisson") return RunMode::Poisson;
  if (s == "compare") return RunMode::Compare;
  if (s == "leibniz" || s == "leibniz-test") return RunMode::Leibniz;
  throw ParseError("run.mode: unknown mode '" + s + "'");
}

PoissonSolver parse_solver(const std::string& s) {
  if (s == "auto") return PoissonSolver::Auto;
  if (s == "stacked") return PoissonSolver::Stacked;
  if (s == "convolution") return PoissonSolver::Convolution;
  throw ParseError("run.solver: unknown solver '" + s + "'");
}

InitialData parse_initial(const json& j, int n) {
  InitialData init;
  if (!j.is_object()) throw ParseError("initial: expected an object");
  const bool has_gaussian = j.contains("gaussian");
  const bool has_state = j.contains("state");
  if (has_gaussian == has_state) throw ParseError("initial: give exactly one of 'gaussian' or 'state'");
  if (has_gaussian) {
    const json& g = j.at("gaussian");
    init.kind = InitialData::Kind::Gaussian;
    init.gaussian.mu = parse_vector(require(g, "mu", "initial.gaussian"), 2 * n, "initial.gaussian.mu");
    init.gaussian.D = parse_matrix(require(g, "D", "initial.gaussian"), 2 * n, "initial.gaussian.D");
    return init;
  }
  const std::string state = j.at("state").get<std::string>();
  if (state == "vacuum") {
    init.kind = InitialData::Kind::Vacuum;
  } else if (state == "coherent") {
    init.kind = InitialData::Kind::Coherent;
    init.alpha = parse_vector(require(j, "alpha", "initial"), n, "initial.alpha");
  } else if (state == "number" || state == "fock") {
    init.kind = InitialData::Kind::Number;
    init.occupation = require(j, "k", "initial").get<std::vector<int>>();
    if (static_cast<int>(init.occupation.size()) != n) throw ParseError("initial.k: expected one occupation per mode");
  } else if (state == "thermal") {
    init.kind = InitialData::Kind::Thermal;
    const auto nb = require(j, "nbar", "initial").get<std::vector<double>>();
    if (static_cast<int>(nb.size()) != n) throw ParseError("initial.nbar: expected one occupation per mode");
    init.nbar = Eigen::Map<const RealVector>(nb.data(), n);
  } else {
    throw ParseError("initial.state: unknown state '" + state + "'");
  }
  return init;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
  try {
    const json root = json::parse(json_text);
    if (!root.is_object()) throw ParseError("scenario: expected a JSON object");
    Scenario s;
    if (root.contains("generator")) {
      s.generator = parse_generator(root.at("generator"), "generator");
      s.modes = s.generator->modes;
    }
    if (root.contains("schedule")) {
      const json& segs = require(root.at("schedule"), "segments", "schedule");
      if (!segs.is_array() || segs.empty()) throw ParseError("schedule.segments: expected a non-empty array");
      for (std::size_t i = 0; i < segs.size(); ++i) {
        const std::string where = "schedule.segments[" + std::to_string(i) + "]";
        s.schedule.push_back({require(segs[i], "duration", where).get<double>(),
                              parse_generator(require(segs[i], "generator", where), where + ".generator")});
      }
      if (s.modes == 0) s.modes = s.schedule.front().generator.modes;
    }
    if (root.contains("poisson")) {
      const json& p = root.at("poisson");
      PoissonModel model;
      const json& procs = require(p, "processes", "poisson");
      if (!procs.is_array()) throw ParseError("poisson.processes: expected an array");
      for (std::size_t i = 0; i < procs.size(); ++i) {
        const std::string where = "poisson.processes[" + std::to_string(i) + "]";
        model.processes.push_back({require(procs[i], "rate", where).get<double>(),
                                   parse_generator(require(procs[i], "generator", where), where + ".generator")});
      }
      if (p.contains("jump_duration")) model.jump_duration = p.at("jump_duration").get<double>();
      if (s.modes == 0 && !model.processes.empty()) s.modes = model.modes();
      s.poisson = std::move(model);
    }
    if (root.contains("run")) {
      const json& r = root.at("run");
      RunSettings& rs = s.run;
      if (r.contains("mode")) rs.mode = parse_mode(r.at("mode").get<std::string>());
      if (r.contains("order")) rs.order = r.at("order").get<int>();
      if (r.contains("t_max")) rs.t_max = r.at("t_max").get<double>();
      if (r.contains("dt")) rs.dt = r.at("dt").get<double>();
      if (r.contains("tol")) rs.tol = r.at("tol").get<double>();
      if (r.contains("tol_ode")) rs.tol_ode = r.at("tol_ode").get<double>();
      if (r.contains("cutoff")) rs.cutoff = r.at("cutoff").get<int>();
      if (r.contains("seed")) rs.seed = r.at("seed").get<std::uint64_t>();
      if (r.contains("output")) rs.output = r.at("output").get<std::string>();
      if (r.contains("solver")) rs.solver = parse_solver(r.at("solver").get<std::string>());
      if (r.contains("instances")) rs.instances = r.at("instances").get<int>();
    }
    if (root.contains("initial")) {
      if (s.modes == 0) throw ParseError("initial: the mode count is unknown without a generator");
      s.initial = parse_initial(root.at("initial"), s.modes);
    } else if (s.run.mode != RunMode::Leibniz) {
      throw ParseError("scenario: missing field 'initial'");
    }
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void apply_overrides(Scenario& s, const Overrides& o) {
  if (o.order) s.run.order = *o.order;
  if (o.t_max) s.run.t_max = *o.t_max;
  if (o.dt) s.run.dt = *o.dt;
  if (o.tol) s.run.tol = *o.tol;
  if (o.seed) s.run.seed = *o.seed;
  if (o.output) s.run.output = *o.output;
  if (o.mode) s.run.mode = *o.mode;
}

namespace {

void check_generator(const QuadraticGenerator& g, int modes, const std::string& where) {
  if (g.modes != modes) throw ValidationError(where + ": mode count differs from the scenario's");
  const auto report = validate_generator(g);
  if (!report.ok()) throw ValidationError(where + ": " + report.describe());
}

bool uses_oracle(const Scenario& s) { return s.run.mode == RunMode::Oracle || s.run.mode == RunMode::Compare; }

}  // namespace

void validate_scenario(const Scenario& s) {
  const RunSettings& r = s.run;
  if (r.mode == RunMode::Leibniz) {
    if (r.instances < 1) throw ValidationError("run.instances must be >= 1");
    return;
  }
  if (s.modes < 1) throw ValidationError("scenario has no generator");
  if (r.order < 1 || r.order > defaults::kMaxOrder) {
    throw ValidationError("run.order must lie in 1.." + std::to_string(defaults::kMaxOrder));
  }
  if (!(r.t_max >= 0.0) || !std::isfinite(r.t_max)) throw ValidationError("run.t_max must be >= 0");
  if (!(r.dt > 0.0) || !std::isfinite(r.dt)) throw ValidationError("run.dt must be positive");
  if (r.tol < 0.0) throw ValidationError("run.tol must be >= 0");
  if (!(r.tol_ode > 0.0)) throw ValidationError("run.tol_ode must be positive");

  if (s.generator) check_generator(*s.generator, s.modes, "generator");
  for (std::size_t i = 0; i < s.schedule.size(); ++i) {
    const std::string where = "schedule.segments[" + std::to_string(i) + "]";
    if (!(s.schedule[i].duration > 0.0)) throw ValidationError(where + ": duration must be positive");
    check_generator(s.schedule[i].generator, s.modes, where + ".generator");
  }
  const bool poisson_run = r.mode == RunMode::Poisson || (r.mode == RunMode::Compare && s.poisson);
  if (poisson_run) {
    if (!s.poisson) throw ValidationError("poisson mode needs a 'poisson' block");
    if (s.poisson->modes() != s.modes) throw ValidationError("poisson: mode count differs from the scenario's");
    validate_model(*s.poisson);
    if (r.order > defaults::kMaxPoissonOrder) {
      throw ValidationError("run.order exceeds the Poisson order limit " + std::to_string(defaults::kMaxPoissonOrder));
    }
  } else if (!s.generator && s.schedule.empty()) {
    throw ValidationError("mode '" + std::string(mode_name(r.mode)) + "' needs a generator or a schedule");
  }

  const InitialData& init = s.initial;
  switch (init.kind) {
    case InitialData::Kind::Gaussian: {
      if (uses_oracle(s)) {
        throw ValidationError("oracle runs need a Fock-state initial label (vacuum, coherent, number, thermal)");
      }
      const auto report = validate_gaussian(init.gaussian);
      if (!report.ok()) throw ValidationError("initial.gaussian: " + report.describe());
      break;
    }
    case InitialData::Kind::Number:
      for (int k : init.occupation) {
        if (k < 0) throw ValidationError("initial.k: occupations must be >= 0");
        if (uses_oracle(s) && k >= r.cutoff) throw ValidationError("initial.k: occupation not below run.cutoff");
      }
      break;
    case InitialData::Kind::Thermal:
      if ((init.nbar.array() < 0.0).any()) throw ValidationError("initial.nbar: occupations must be >= 0");
      break;
    default:
      break;
  }
  if (uses_oracle(s)) {
    if (r.cutoff < 2) throw ValidationError("run.cutoff must be >= 2");
    const long limit = poisson_run ? defaults::kMaxSuperopDimension : defaults::kMaxFockDimension;
    if (FockConfig{s.modes, r.cutoff}.dimension() > limit) {
      throw ValidationError("run.cutoff gives a Fock dimension above " + std::to_string(limit));
    }
  }
}

std::vector<double> time_grid(double t_max, double dt) {
  if (!(dt > 0.0) || t_max < 0.0) throw std::invalid_argument("time_grid: need dt > 0 and t_max >= 0");
  const auto steps = static_cast<long>(std::ceil(t_max / dt - 1e-9));
  std::vector<double> grid;
  for (long i = 0; i < steps; ++i) grid.push_back(static_cast<double>(i) * dt);
  grid.push_back(t_max);
  if (grid.size() > 1 && grid[grid.size() - 2] >= t_max) grid.erase(grid.end() - 2);
  return grid;
}

double relative_error(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) throw DimensionError("relative_error: size mismatch");
  if (x.size() == 0) return 0.0;
  const double diff = (x - y).cwiseAbs().maxCoeff();
  const double scale = y.cwiseAbs().maxCoeff();
  return scale < 1e-12 ? diff : diff / scale;
}

namespace {

struct OracleRun {
  std::vector<MomentHierarchy> moments;
  MomentHierarchy initial{1, 0};  // moments of the truncated initial state
  double max_leakage = 0.0;
  double max_trace_drift = 0.0;
  bool leakage_exceeded = false;
  int cutoff = 0;
};

Matrix initial_density(const InitialData& init, const FockConfig& cfg) {
  switch (init.kind) {
    case InitialData::Kind::Vacuum: return vacuum_state(cfg);
    case InitialData::Kind::Coherent: return coherent_state(cfg, init.alpha);
    case InitialData::Kind::Number: return number_state(cfg, init.occupation);
    case InitialData::Kind::Thermal: return thermal_state(cfg, init.nbar);
    case InitialData::Kind::Gaussian: break;
  }
  throw ValidationError("oracle runs need a Fock-state initial label");
}

OracleRun run_oracle_once(const Scenario& s, std::span<const double> grid, int cutoff) {
  const FockConfig cfg{s.modes, cutoff};
  const int m = s.run.order;
  const Matrix rho0 = initial_density(s.initial, cfg);
  const OperatorSet probe = build_operators(QuadraticGenerator::trivial(s.modes), cfg);
  OracleRun out;
  out.cutoff = cutoff;
  out.initial = extract_moments(rho0, probe, m);
  MasterTrajectory traj;
  const bool poisson_run = s.run.mode == RunMode::Poisson || (s.run.mode == RunMode::Compare && s.poisson);
  if (poisson_run) {
    std::vector<Matrix> maps;
    std::vector<double> rates;
    for (const auto& p : s.poisson->processes) {
      maps.push_back(poisson_jump_map(build_operators(p.generator, cfg), s.poisson->jump_duration));
      rates.push_back(p.rate);
    }
    traj = integrate_poisson_master(rho0, maps, rates, grid, cfg);
  } else if (!s.schedule.empty()) {
    std::vector<OperatorSegment> segs;
    for (const auto& seg : s.schedule) segs.push_back({seg.duration, build_operators(seg.generator, cfg)});
    traj = integrate_master(rho0, segs, grid, s.run.tol_ode);
  } else {
    traj = integrate_master(rho0, build_operators(*s.generator, cfg), grid, s.run.tol_ode);
  }
  for (const auto& rho : traj.states) out.moments.push_back(extract_moments(rho, probe, m));
  out.max_leakage = traj.max_leakage;
  out.max_trace_drift = traj.max_trace_drift;
  out.leakage_exceeded = traj.leakage_exceeded;
  return out;
}

OracleRun run_oracle(const Scenario& s, std::span<const double> grid) {
  const bool poisson_run = s.run.mode == RunMode::Poisson || (s.run.mode == RunMode::Compare && s.poisson);
  const long limit = poisson_run ? defaults::kMaxSuperopDimension : defaults::kMaxFockDimension;
  return with_leakage_control(
             s.modes, s.run.cutoff, [&](int c) { return run_oracle_once(s, grid, c); }, limit)
      .first;
}

MomentHierarchy engine_initial(const Scenario& s) {
  const int m = s.run.order;
  const InitialData& init = s.initial;
  switch (init.kind) {
    case InitialData::Kind::Gaussian: return gaussian_hierarchy(init.gaussian, m);
    case InitialData::Kind::Vacuum: return gaussian_hierarchy(GaussianData::vacuum(s.modes), m);
    case InitialData::Kind::Coherent: return gaussian_hierarchy(GaussianData::coherent(init.alpha), m);
    case InitialData::Kind::Thermal: return gaussian_hierarchy(GaussianData::thermal(init.nbar), m);
    case InitialData::Kind::Number: {
      // Products of m ladder operators never leave levels <= k + m, so this cutoff is exact.
      const int top = *std::max_element(init.occupation.begin(), init.occupation.end());
      const FockConfig cfg{s.modes, top + m + 1};
      return extract_moments(number_state(cfg, init.occupation),
                             build_operators(QuadraticGenerator::trivial(s.modes), cfg), m);
    }
  }
  throw ValidationError("unknown initial data");
}

std::vector<MomentHierarchy> run_engine(const Scenario& s, const MomentHierarchy& initial, std::span<const double> grid) {
  const bool poisson_run = s.run.mode == RunMode::Poisson || (s.run.mode == RunMode::Compare && s.poisson);
  if (poisson_run) return evolve_poisson(*s.poisson, initial, grid, PoissonOptions{s.run.solver});
  const PropagatorBundle bundle =
      s.schedule.empty()
          ? constant_bundle(drift_data(*s.generator), grid)
          : integrate_bundle(CoefficientSchedule::piecewise(s.schedule), grid, s.run.tol_ode);
  std::vector<MomentHierarchy> out;
  for (double t : grid) out.push_back(evolve_hierarchy(initial, bundle, t));
  return out;
}

std::filesystem::path output_dir(const Scenario& s) {
  std::filesystem::path dir(s.run.output);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_csv(const std::filesystem::path& file, const Scenario& s, std::span<const double> grid,
               const std::vector<MomentHierarchy>& traj, const std::string& source, int cutoff = 0) {
  std::vector<TrajectoryPoint> points;
  for (std::size_t i = 0; i < grid.size(); ++i) points.push_back({grid[i], traj[i]});
  std::vector<std::pair<std::string, std::string>> meta{{"mode", mode_name(s.run.mode)},
                                                        {"source", source},
                                                        {"seed", std::to_string(s.run.seed)},
                                                        {"n", std::to_string(s.modes)},
                                                        {"m", std::to_string(s.run.order)}};
  if (cutoff > 0) meta.emplace_back("cutoff", std::to_string(cutoff));
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
  write_trajectory_csv(out, points, meta);
}

void write_report(const std::filesystem::path& file, const std::string& text, std::ostream& log) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
  out << text;
  log << text;
}

std::string oracle_summary(const OracleRun& o) {
  std::ostringstream os;
  os << std::setprecision(3) << "oracle cutoff " << o.cutoff << ", max leakage " << o.max_leakage
     << ", max trace drift " << o.max_trace_drift << "\n";
  if (o.leakage_exceeded) os << "leakage above " << defaults::kLeakageThreshold << ": truncation not trustworthy\n";
  return os.str();
}

int run_compare(const Scenario& s, std::span<const double> grid, std::ostream& log) {
  const OracleRun oracle = run_oracle(s, grid);
  const auto engine = run_engine(s, oracle.initial, grid);
  const double tol = s.run.tol > 0.0 ? s.run.tol : defaults::kCompareTolerance;
  std::ostringstream os;
  os << "compare: engine vs truncated Fock oracle, " << grid.size() << " times, orders 1.." << s.run.order << "\n";
  os << oracle_summary(oracle);
  double worst = 0.0;
  for (int k = 1; k <= s.run.order; ++k) {
    double max_rel = 0.0, sum_rel = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double e = relative_error(engine[i].tensor(k), oracle.moments[i].tensor(k));
      max_rel = std::max(max_rel, e);
      sum_rel += e;
    }
    worst = std::max(worst, max_rel);
    os << std::setprecision(3) << "order " << k << ": max rel error " << max_rel << ", mean rel error "
       << sum_rel / static_cast<double>(grid.size()) << "\n";
  }
  const bool pass = worst <= tol;
  os << std::setprecision(3) << "result: " << (pass ? "pass" : "fail") << " (max rel error " << worst
     << ", tolerance " << tol << ")\n";
  const auto dir = output_dir(s);
  write_csv(dir / "engine.csv", s, grid, engine, "engine");
  write_csv(dir / "oracle.csv", s, grid, oracle.moments, "oracle", oracle.cutoff);
  write_report(dir / "report.txt", os.str(), log);
  if (oracle.leakage_exceeded) return kExitLeakage;
  return pass ? kExitOk : kExitCompareFailed;
}

int run_leibniz(const Scenario& s, std::ostream& log) {
  Rng rng(s.run.seed);
  const double tol = s.run.tol > 0.0 ? s.run.tol : defaults::kLeibnizTolerance;
  std::uniform_int_distribution<int> pick_d(0, 2), pick_m(2, 4), pick_j(0, 3);
  double worst = 0.0;
  for (int i = 0; i < s.run.instances; ++i) {
    const int d = 4 + 2 * pick_d(rng);
    const int m = pick_m(rng);
    const int nj = pick_j(rng);
    const Matrix H = random_hermitian(d, rng);
    std::vector<Matrix> jumps, factors;
    for (int j = 0; j < nj; ++j) jumps.push_back(random_complex_matrix(d, d, rng));
    for (int k = 0; k < m; ++k) factors.push_back(random_complex_matrix(d, d, rng));
    worst = std::max(worst, leibniz_check(H, jumps, factors).relative());
  }
  const bool pass = worst < tol;
  std::ostringstream os;
  os << std::setprecision(3) << "leibniz: " << s.run.instances << " random instances (seed " << s.run.seed
     << "), max relative residual " << worst << ", tolerance " << tol << "\nresult: " << (pass ? "pass" : "fail")
     << "\n";
  write_report(output_dir(s) / "report.txt", os.str(), log);
  return pass ? kExitOk : kExitCompareFailed;
}

}  // namespace

int run_scenario(const Scenario& s, std::ostream& log) {
  validate_scenario(s);
  if (s.run.mode == RunMode::Leibniz) return run_leibniz(s, log);
  const auto grid = time_grid(s.run.t_max, s.run.dt);
  switch (s.run.mode) {
    case RunMode::Engine:
    case RunMode::Poisson: {
      const auto traj = run_engine(s, engine_initial(s), grid);
      write_csv(output_dir(s) / "trajectory.csv", s, grid, traj, s.run.mode == RunMode::Poisson ? "poisson" : "engine");
      log << mode_name(s.run.mode) << ": wrote " << grid.size() << " times, orders 0.." << s.run.order << "\n";
      return kExitOk;
    }
    case RunMode::Oracle: {
      const OracleRun oracle = run_oracle(s, grid);
      const auto dir = output_dir(s);
      write_csv(dir / "trajectory.csv", s, grid, oracle.moments, "oracle", oracle.cutoff);
      write_report(dir / "report.txt", oracle_summary(oracle), log);
      return oracle.leakage_exceeded ? kExitLeakage : kExitOk;
    }
    case RunMode::Compare: return run_compare(s, grid, log);
    case RunMode::Leibniz: break;
  }
  return kExitOk;
}

}  // namespace qmoments
