#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "qspin/scenario/runner.hpp"

namespace qspin {
namespace {

namespace fs = std::filesystem;

const char* kMinimal = R"(
lattice: { sites: 4 }
interaction: { preset: xx }
partition: { regions: [[0, 1], [2, 3]] }
betas: [1.0, 1.0]
)";

const char* kSixQubit = R"(
lattice: { sites: 6 }
interaction: { preset: xx }
partition: { regions: [[2, 3], [0, 1], [4, 5]] }
betas: [1.0, 0.5, 2.0]
time_grid: { start: 0, stop: 4, count: 5 }
horizons: [1, 5, 20]
)";

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("qspin_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

template <class E>
E parse_error(const std::string& text) {
  try {
    (void)parse_config(text);
  } catch (const E& e) {
    return e;
  }
  ADD_FAILURE() << "expected an error";
  return E("", "");
}

// ------------------------------------------------------------ parse_config

TEST(ParseConfig, MinimalXXConfigParses) {
  const auto cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.local_dims, std::vector<int>(4, 2));
  EXPECT_EQ(cfg.interaction.preset, "xx");
  EXPECT_EQ(cfg.regions.size(), 2u);
  EXPECT_EQ(cfg.betas, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(cfg.initial_state, "product_gibbs");
  EXPECT_EQ(cfg.time_grid.count, 0u);
}

TEST(ParseConfig, BetasLengthMismatchNamesBetas) {
  const auto e = parse_error<ValidationError>(R"(
lattice: { sites: 4 }
interaction: { preset: xx }
partition: { regions: [[0, 1], [2, 3]] }
betas: [1.0, 1.0, 2.0]
)");
  EXPECT_EQ(e.key(), "betas");
  EXPECT_EQ(e.line(), 5);
  EXPECT_NE(std::string(e.what()).find("`betas`"), std::string::npos);
}

TEST(ParseConfig, UnknownPresetListsKnownPresets) {
  const auto e = parse_error<ParseError>(R"(
lattice: { sites: 4 }
interaction: { preset: ising3d }
partition: { regions: [[0, 1], [2, 3]] }
betas: [1.0, 1.0]
)");
  EXPECT_EQ(e.key(), "interaction.preset");
  for (const auto& name : known_presets()) EXPECT_NE(std::string(e.what()).find(name), std::string::npos) << name;
}

TEST(ParseConfig, PartitionErrorsAreLineAnchored) {
  const auto e = parse_error<ValidationError>(R"(
lattice: { sites: 4 }
interaction: { preset: xx }
partition:
  regions: [[0, 1], [1, 2, 3]]
betas: [1.0, 1.0]
)");
  EXPECT_EQ(e.key(), "partition.regions");
  EXPECT_EQ(e.line(), 5);
}

TEST(ParseConfig, UnknownKeysAreRejected) {
  const auto e = parse_error<ParseError>(std::string(kMinimal) + "temperature: 3\n");
  EXPECT_EQ(e.key(), "temperature");
}

TEST(ParseConfig, PresetArgumentsAndCustomTerms) {
  auto cfg = parse_config(R"(
lattice: { sites: 3 }
interaction: { preset: xxz(0.5) }
partition: { regions: [[1], [0], [2]] }
betas: [1, 1, 1]
)");
  EXPECT_EQ(cfg.interaction.preset, "xxz");
  EXPECT_DOUBLE_EQ(cfg.interaction.delta, 0.5);

  cfg = parse_config(R"(
lattice: { sites: 2, local_dim: [2, 3] }
interaction:
  preset: custom
  terms:
    - { support: [0], matrix: [1, [0, -1], [0, 1], -1] }
partition: { regions: [[0], [1]] }
betas: [1, 2]
)");
  ASSERT_EQ(cfg.interaction.custom_terms.size(), 1u);
  EXPECT_EQ(cfg.interaction.custom_terms[0].matrix()(0, 1), Complex(0, -1));
}

TEST(ParseConfig, NonHermitianCustomTermIsAValidationError) {
  const auto e = parse_error<ValidationError>(R"(
lattice: { sites: 2 }
interaction:
  preset: custom
  terms:
    - { support: [0], matrix: [0, 1, 0, 0] }
partition: { regions: [[0], [1]] }
betas: [1, 2]
)");
  EXPECT_EQ(e.key(), "interaction.terms[0]");
}

TEST(ParseConfig, PresetsRejectNonQubitLattices) {
  const auto e = parse_error<ValidationError>(R"(
lattice: { sites: 3, local_dim: 3 }
interaction: { preset: xx }
partition: { regions: [[1], [0], [2]] }
betas: [1, 1, 1]
)");
  EXPECT_EQ(e.key(), "interaction.preset");
}

TEST(ParseConfig, OversizedLatticeIsACapacityError) {
  EXPECT_THROW((void)parse_config(R"(
lattice: { sites: 40 }
interaction: { preset: xx }
partition: { regions: [[0], [1]] }
betas: [1, 1]
)"),
               CapacityError);
}

TEST(ParseConfig, ToleranceOverrides) {
  const auto cfg = parse_config(std::string(kMinimal) + "tolerances: { subadditivity: 1e-6 }\n");
  EXPECT_DOUBLE_EQ(cfg.tolerances.subadditivity, 1e-6);
  EXPECT_DOUBLE_EQ(cfg.tolerances.h_vs_H, Tolerances{}.h_vs_H);
  const auto e = parse_error<ParseError>(std::string(kMinimal) + "tolerances: { nonsense: 1 }\n");
  EXPECT_EQ(e.key(), "tolerances.nonsense");
  EXPECT_NE(std::string(e.what()).find("subadditivity"), std::string::npos);
}

TEST(ParseConfig, CustomInitialStateIsValidated) {
  const std::string base = R"(
lattice: { sites: 2 }
interaction: { preset: xx }
partition: { regions: [[0], [1]] }
betas: [1, 1]
)";
  const auto cfg = parse_config(base + "initial_state: { kind: custom, matrix: [0.25,0,0,0, 0,0.25,0,0, 0,0,0.25,0, 0,0,0,0.25] }\n");
  EXPECT_EQ(cfg.initial_state, "custom");
  const auto e = parse_error<ValidationError>(
      base + "initial_state: { kind: custom, matrix: [0.5,0,0,0, 0,0.5,0,0, 0,0,0.5,0, 0,0,0,0.5] }\n");
  EXPECT_EQ(e.key(), "initial_state.matrix");
}

TEST(ParseConfig, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(fs::path(QSPIN_SOURCE_DIR) / "configs")) {
    SCOPED_TRACE(entry.path().string());
    EXPECT_NO_THROW((void)load_config(entry.path().string()));
  }
}

// ------------------------------------------------------------ run_scenario

TEST(RunScenario, EmptyTimeGridGivesEmptyTimeseriesAndValidSummary) {
  const auto dir = scratch("empty_grid");
  const auto cfg = parse_config(kMinimal);
  const auto result = run_scenario(cfg, dir, 1);
  EXPECT_TRUE(result.timeseries.empty());
  const auto ts = slurp(dir / "timeseries.csv");
  EXPECT_EQ(std::count(ts.begin(), ts.end(), '\n'), 1);  // header only
  const auto summary = slurp(dir / "summary.csv");
  EXPECT_NE(summary.find("time_points,0\n"), std::string::npos);
  EXPECT_NE(summary.find("checks_failed,0\n"), std::string::npos);
  EXPECT_EQ(result.summary.checks_failed, 0u);
}

TEST(RunScenario, RerunIsByteIdentical) {
  const auto cfg = parse_config(kSixQubit);
  const auto a = scratch("rerun_a");
  const auto b = scratch("rerun_b");
  run_scenario(cfg, a, 1);
  run_scenario(cfg, b, 3);
  EXPECT_EQ(slurp(a / "timeseries.csv"), slurp(b / "timeseries.csv"));
  EXPECT_EQ(slurp(a / "summary.csv"), slurp(b / "summary.csv"));
}

TEST(RunScenario, TimeseriesHeaderIsStable) {
  const auto dir = scratch("golden");
  run_scenario(parse_config(kSixQubit), dir, 1);
  EXPECT_EQ(first_line(dir / "timeseries.csv"),
            "t,S_total,S_region_0,S_region_1,S_region_2,gap_D,"
            "rate_eq1_region_0,rate_eq1_region_1,rate_eq1_region_2,"
            "e_micro_h,e_micro_H,e_thermo,"
            "flux_region_0,flux_region_1,flux_region_2,floored_regions");
  std::ifstream in(dir / "timeseries.csv");
  std::string line;
  std::size_t rows = 0;
  std::getline(in, line);
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 15) << line;
  }
  EXPECT_EQ(rows, 5u);
}

TEST(RunScenario, SummaryMatchesDirectAveragedThermoCall) {
  const auto cfg = parse_config(kSixQubit);
  const auto result = evaluate_scenario(cfg, 1);
  const Model model = build_model(cfg);
  const auto psi0 = product_gibbs(model, cfg.betas);
  ASSERT_EQ(result.summary.horizons.size(), 3u);
  for (const auto& h : result.summary.horizons) {
    EXPECT_NEAR(h.e_thermo_averaged, ep_thermo_averaged(psi0, model, cfg.betas, h.horizon), 1e-12);
    EXPECT_GE(h.e_thermo_averaged, -1e-9);
  }
  EXPECT_EQ(result.summary.checks_failed, 0u) << csv::join(result.summary.failed_checks, ';');

  // and the value written to summary.csv round-trips exactly
  const auto dir = scratch("summary_value");
  run_scenario(cfg, dir, 1);
  const auto summary = slurp(dir / "summary.csv");
  const std::string key = "T=5/e_thermo_averaged,";
  const auto pos = summary.find(key);
  ASSERT_NE(pos, std::string::npos);
  const double written = std::stod(summary.substr(pos + key.size()));
  EXPECT_EQ(written, result.summary.horizons[1].e_thermo_averaged);
}

TEST(RunScenario, ReportedChecksFailUnderImpossibleTolerance) {
  auto cfg = parse_config(kSixQubit);
  cfg.tolerances.h_vs_H = -1.0;
  const auto result = evaluate_scenario(cfg, 1);
  EXPECT_EQ(result.summary.checks_failed, result.timeseries.size());
  ASSERT_EQ(result.summary.failed_checks.size(), 1u);
  EXPECT_EQ(result.summary.failed_checks[0], "h_vs_H");
}

// ------------------------------------------------------------ run_sweep

TEST(RunSweep, SingleValueSweepMatchesRunScenario) {
  SweepSpec spec;
  spec.base = parse_config(kSixQubit);
  spec.param = SweepParam::horizon_T;
  spec.values = {5.0};
  const auto rows = run_sweep(spec, 1);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].error.empty()) << rows[0].error;

  auto direct_cfg = spec.base;
  direct_cfg.horizons = {5.0};
  const auto direct = evaluate_scenario(direct_cfg, 1);
  const auto& h = direct.summary.horizons.back();
  EXPECT_EQ(rows[0].e_thermo_averaged, h.e_thermo_averaged);
  EXPECT_EQ(rows[0].relative_entropy_rate, h.relative_entropy_rate);
  EXPECT_EQ(rows[0].flux_averages, h.flux_averages);
  EXPECT_EQ(rows[0].subadditivity_final, direct.timeseries.back().subadditivity_gap);
  EXPECT_EQ(rows[0].checks_failed, direct.summary.checks_failed);
}

TEST(RunSweep, ReservoirSizeSweepEmitsGapColumnForEveryRow) {
  SweepSpec spec;
  spec.base = parse_config(R"(
lattice: { sites: 4 }
interaction: { preset: xx }
partition: { regions: [[1, 2], [0], [3]] }
betas: [1.0, 0.5, 2.0]
time_grid: { start: 0, stop: 2, count: 3 }
horizons: [5]
)");
  spec.param = SweepParam::reservoir_size;
  spec.values = {1, 2, 3, 4};
  const auto dir = scratch("reservoir_sweep");
  const auto rows = run_sweep(spec, dir, 2);
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_TRUE(rows[i].error.empty()) << rows[i].error;
    EXPECT_EQ(rows[i].value, spec.values[i]);
    EXPECT_EQ(rows[i].dimension, std::size_t{1} << (2 * (i + 1) + 2));
    EXPECT_TRUE(std::isfinite(rows[i].gap_final));
    EXPECT_TRUE(rows[i].positivity_ok);
  }
  const auto header = first_line(dir / "sweep.csv");
  EXPECT_NE(header.find("gap_micro_thermo_final"), std::string::npos);
  EXPECT_EQ(header,
            "param,value,dimension,horizon_T,e_thermo_averaged,relative_entropy_rate,"
            "flux_avg_region_0,flux_avg_region_1,flux_avg_region_2,gap_micro_thermo_final,"
            "gap_micro_thermo_mean_abs,subadditivity_gap_final,min_subadditivity_gap,max_h_vs_H,"
            "positivity_ok,checks_failed,error");
}

TEST(RunSweep, HorizonSweepKeepsAveragedPositivity) {
  SweepSpec spec;
  spec.base = parse_config(R"(
lattice: { sites: 6 }
interaction: { preset: random, seed: 4 }
partition: { regions: [[2, 3], [0, 1], [4, 5]] }
betas: [1.0, 0.5, 2.0]
)");
  spec.param = SweepParam::horizon_T;
  spec.values = {0.5, 1, 2, 5, 10, 50, 200};
  const auto rows = run_sweep(spec, 1);
  for (const auto& r : rows) {
    EXPECT_TRUE(r.error.empty()) << r.error;
    EXPECT_GE(r.e_thermo_averaged, -1e-9) << "T = " << r.value;
    EXPECT_NEAR(r.e_thermo_averaged, r.relative_entropy_rate, 1e-8);
    EXPECT_EQ(r.horizon, r.value);
  }
}

TEST(RunSweep, BoundaryOffsetMovesTheSmallSystem) {
  SweepSpec spec;
  spec.base = parse_config(R"(
lattice: { sites: 6 }
interaction: { preset: xx }
partition: { regions: [[2, 3], [0, 1], [4, 5]] }
betas: [1.0, 0.5, 2.0]
horizons: [3]
)");
  spec.param = SweepParam::boundary_offset;
  const auto left = instantiate(spec, -1);
  EXPECT_EQ(left.regions[0], (SiteSet{1, 2}));
  EXPECT_EQ(left.regions[1], (SiteSet{0}));
  EXPECT_EQ(left.regions[2], (SiteSet{3, 4, 5}));
  spec.values = {-2, -1, 0, 1, 2};
  const auto rows = run_sweep(spec, 1);
  EXPECT_FALSE(rows[0].error.empty());  // left reservoir would be empty
  EXPECT_FALSE(rows[4].error.empty());
  for (std::size_t i = 1; i < 4; ++i) EXPECT_TRUE(rows[i].error.empty()) << rows[i].error;
}

TEST(RunSweep, BetaGapSplitsReservoirTemperatures) {
  SweepSpec spec;
  spec.base = parse_config(kSixQubit);
  spec.param = SweepParam::beta_gap;
  const auto cfg = instantiate(spec, 1.0);
  EXPECT_DOUBLE_EQ(cfg.betas[1], 1.75);
  EXPECT_DOUBLE_EQ(cfg.betas[2], 0.75);
  EXPECT_DOUBLE_EQ(cfg.betas[0], 1.0);
}

TEST(RunSweep, ValueListMustBeNonEmptyAndMonotone) {
  SweepSpec spec;
  spec.base = parse_config(kSixQubit);
  spec.param = SweepParam::horizon_T;
  EXPECT_THROW(validate_sweep(spec), ValidationError);
  spec.values = {1, 3, 2};
  EXPECT_THROW(validate_sweep(spec), ValidationError);
  spec.values = {3, 2, 1};
  EXPECT_NO_THROW(validate_sweep(spec));
  spec.param = SweepParam::reservoir_size;
  spec.values = {1, 1.5};
  EXPECT_THROW(validate_sweep(spec), ValidationError);
  EXPECT_THROW(parse_sweep_param("temperature"), ParseError);
}

// ------------------------------------------------------------ CLI

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QSPIN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path write_config(const std::string& name, const std::string& text) {
  const auto dir = scratch("cli_" + name);
  const auto path = dir / "scenario.yaml";
  std::ofstream(path) << text;
  return path;
}

TEST(Cli, RunSucceedsAndWritesBothFiles) {
  const auto cfg = write_config("ok", kSixQubit);
  const auto out = cfg.parent_path() / "out";
  EXPECT_EQ(run_cli("run --config " + cfg.string() + " --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "timeseries.csv"));
  EXPECT_TRUE(fs::exists(out / "summary.csv"));
}

TEST(Cli, ConfigErrorExitsWithTwo) {
  const auto cfg = write_config("bad", R"(
lattice: { sites: 4 }
interaction: { preset: xx }
partition: { regions: [[0, 1], [2, 3]] }
betas: [1.0]
)");
  EXPECT_EQ(run_cli("run --config " + cfg.string() + " --out " + (cfg.parent_path() / "out").string()), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
}

TEST(Cli, CapacityErrorExitsWithThree) {
  const auto cfg = write_config("huge", R"(
lattice: { sites: 30 }
interaction: { preset: xx }
partition: { regions: [[0], [1]] }
betas: [1, 1]
)");
  EXPECT_EQ(run_cli("run --config " + cfg.string()), 3);
}

TEST(Cli, InvariantFailureExitsWithOne) {
  const auto cfg = write_config("strict", std::string(kSixQubit) + "tolerances: { entropy_invariance: -1 }\n");
  EXPECT_EQ(run_cli("run --config " + cfg.string() + " --out " + (cfg.parent_path() / "out").string()), 1);
}

TEST(Cli, SweepWritesSweepCsv) {
  const auto cfg = write_config("sweep", kSixQubit);
  const auto out = cfg.parent_path() / "out";
  EXPECT_EQ(run_cli("sweep --config " + cfg.string() + " --param horizon_T --values 1,2,4 --out " + out.string()), 0);
  std::ifstream in(out / "sweep.csv");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 4u);
  EXPECT_EQ(run_cli("sweep --config " + cfg.string() + " --param horizon_T --values 2,1,3 --out " + out.string()), 2);
}

}  // namespace
}  // namespace qspin
