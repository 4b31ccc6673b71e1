// qspin: run scenarios, sweeps and the invariant suite from the command line.
//
// Exit codes: 0 success, 1 invariant failure, 2 config error, 3 capacity error.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qspin/qspin.hpp"

namespace {

enum Exit { kOk = 0, kInvariant = 1, kConfig = 2, kCapacity = 3 };

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw qspin::ParseError("values", "cannot read '" + item + "' as a number");
    }
  }
  return out;
}

int report_scenario(const qspin::ScenarioSummary& s, const std::string& out_dir) {
  std::cout << "wrote " << out_dir << "/timeseries.csv and " << out_dir << "/summary.csv (" << s.time_points
            << " time points, D = " << s.dimension << ")\n";
  for (const auto& h : s.horizons)
    std::cout << "T = " << h.horizon << ": e_thermo_averaged = " << h.e_thermo_averaged << "\n";
  if (s.checks_failed == 0) return kOk;
  std::cerr << s.checks_failed << " invariant checks failed:";
  for (const auto& n : s.failed_checks) std::cerr << ' ' << n;
  std::cerr << '\n';
  return kInvariant;
}

int run(const std::string& config, const std::string& out) {
  const auto cfg = qspin::load_config(config);
  const std::string dir = out.empty() ? (cfg.output_dir.empty() ? "." : cfg.output_dir) : out;
  const auto result = qspin::run_scenario(cfg, dir);
  return report_scenario(result.summary, dir);
}

int sweep(const std::string& config, const std::string& param, const std::string& values, const std::string& out) {
  qspin::SweepSpec spec;
  spec.base = qspin::load_config(config);
  spec.param = qspin::parse_sweep_param(param);
  spec.values = parse_values(values);
  qspin::validate_sweep(spec);
  const std::string dir = out.empty() ? (spec.base.output_dir.empty() ? "." : spec.base.output_dir) : out;
  const auto rows = qspin::run_sweep(spec, dir);
  std::size_t errors = 0, failed = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      ++errors;
      std::cerr << param << " = " << r.value << ": " << r.error << '\n';
    } else if (r.checks_failed > 0) {
      ++failed;
      std::cerr << param << " = " << r.value << ": " << r.checks_failed << " invariant checks failed\n";
    }
  }
  std::cout << "wrote " << dir << "/sweep.csv (" << rows.size() << " rows, " << errors << " errors)\n";
  return errors + failed > 0 ? kInvariant : kOk;
}

int check(const std::string& level, const std::vector<std::string>& overrides) {
  qspin::Tolerances tol;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw qspin::ParseError("tolerance", "expected name=value, got '" + o + "'");
    const auto name = o.substr(0, eq);
    double& slot = qspin::tolerance_by_name(tol, name);
    try {
      slot = std::stod(o.substr(eq + 1));
    } catch (const std::exception&) {
      throw qspin::ParseError("tolerances." + name, "cannot read '" + o.substr(eq + 1) + "'");
    }
  }
  const auto outcomes = qspin::run_checks(level == "full" ? qspin::CheckLevel::full : qspin::CheckLevel::fast, tol);
  std::size_t failed = 0;
  for (const auto& c : outcomes) {
    if (c.passed) continue;
    ++failed;
    std::cerr << "FAIL " << c.name << ": measured " << c.measured << ", tolerance " << c.tolerance << '\n';
  }
  std::cout << outcomes.size() - failed << "/" << outcomes.size() << " invariant checks passed (" << level << ")\n";
  return failed ? kInvariant : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy production in finite partitioned quantum spin systems"};
  app.require_subcommand(1);

  std::string config, out, param, values, level = "fast";
  std::vector<std::string> overrides;

  auto* run_cmd = app.add_subcommand("run", "Run one scenario; writes timeseries.csv and summary.csv");
  run_cmd->add_option("--config", config, "Scenario file (YAML)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out, "Output directory (default: the config's `output`, else .)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter; writes sweep.csv");
  sweep_cmd->add_option("--config", config, "Base scenario file (YAML)")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--param", param, "reservoir_size | boundary_offset | horizon_T | beta_gap")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values, strictly monotone")->required();
  sweep_cmd->add_option("--out", out, "Output directory");

  auto* check_cmd = app.add_subcommand("check", "Run the built-in invariant suite");
  check_cmd->add_option("--level", level, "fast | full")->check(CLI::IsMember({"fast", "full"}));
  check_cmd->add_option("--tolerance", overrides, "Override a tolerance, name=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run_cmd) return run(config, out);
    if (*sweep_cmd) return sweep(config, param, values, out);
    return check(level, overrides);
  } catch (const qspin::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const qspin::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << '\n';
    return kCapacity;
  } catch (const qspin::InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kInvariant;
  } catch (const qspin::PartitionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvariant;
  }
}
