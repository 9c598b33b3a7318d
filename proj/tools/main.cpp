// qmoments: run moment-engine, oracle and comparison scenarios from JSON files.
#include "qmoments/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

using namespace qmoments;

namespace {

struct Flags {
  std::string config;
  std::optional<int> order;
  std::optional<double> t_max, dt, tol;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
};

void add_flags(CLI::App* cmd, Flags& f, bool config_required) {
  auto* c = cmd->add_option("--config", f.config, "scenario JSON file");
  if (config_required) c->required();
  cmd->add_option("--order", f.order, "maximum moment order");
  cmd->add_option("--t-max", f.t_max, "final time");
  cmd->add_option("--dt", f.dt, "output grid spacing");
  cmd->add_option("--tol", f.tol, "pass/fail tolerance");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--output", f.output, "output directory");
}

int execute(const Flags& f, std::optional<RunMode> forced, bool validate_only) {
  try {
    Scenario s;
    if (!f.config.empty()) {
      s = load_scenario(f.config);
    } else {
      s.run.mode = RunMode::Leibniz;
    }
    apply_overrides(s, Overrides{f.order, f.t_max, f.dt, f.tol, f.seed, f.output, forced});
    if (validate_only) {
      validate_scenario(s);
      std::cout << "valid scenario (mode " << mode_name(s.run.mode) << ")\n";
      return kExitOk;
    }
    return run_scenario(s, std::cout);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const BudgetError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DimensionError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCompareFailed;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment hierarchies of quadratic open bosonic systems"};
  app.require_subcommand(1);
  Flags run_f, val_f, cmp_f, lz_f;
  auto* run = app.add_subcommand("run", "run the scenario's mode");
  add_flags(run, run_f, true);
  auto* val = app.add_subcommand("validate", "parse and validate a scenario");
  add_flags(val, val_f, true);
  auto* cmp = app.add_subcommand("compare", "compare the moment engine with the Fock oracle");
  add_flags(cmp, cmp_f, true);
  auto* lz = app.add_subcommand("leibniz", "check the generator Leibniz identity on random matrices");
  add_flags(lz, lz_f, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitParse;
  }
  if (*run) return execute(run_f, std::nullopt, false);
  if (*val) return execute(val_f, std::nullopt, true);
  if (*cmp) return execute(cmp_f, RunMode::Compare, false);
  return execute(lz_f, RunMode::Leibniz, false);
}
