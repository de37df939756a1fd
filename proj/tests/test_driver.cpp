#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dpg/core/dpg_system.hpp"
#include "dpg/driver/amr.hpp"
#include "dpg/driver/config.hpp"
#include "dpg/driver/report.hpp"
#include "dpg/driver/selftest.hpp"
#include "dpg/error.hpp"

using namespace dpg;
using namespace dpg::driver;
namespace fs = std::filesystem;

namespace {

RunConfig small(Mode mode, int iters) {
  RunConfig c;
  c.mode = mode;
  c.max_iters = iters;
  c.max_dof = 100000;
  return c;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("dpg_goal_test_" + name);
  fs::remove_all(d);
  return d;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(validate(RunConfig{})); }

TEST(Config, UnknownKeysRejected) {
  EXPECT_THROW(config_from_json({{"bogus", 1}}), ConfigError);
  EXPECT_THROW(config_from_json({{"adaptivity", {{"thetta", 0.5}}}}), ConfigError);
}

TEST(Config, BadValuesRejected) {
  EXPECT_THROW(config_from_json({{"adaptivity", {{"mode", "fancy"}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"adaptivity", {{"theta", 1.0}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"discretization", {{"p", 0}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"discretization", {{"alpha", -1.0}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"domain", {{"x1", 3.0}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"goal", {{"name", "nonsense"}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"boundary", {{"neumann", {"north"}}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"discretization", {{"p", "two"}}}}), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  RunConfig c;
  c.mode = Mode::gmr_explicit;
  c.theta = 0.3;
  c.p = 3;
  c.boundary.sides[static_cast<int>(mesh::Side::left)] = mesh::EdgeSide::neumann;
  c.goal = "boundary_temperature";
  c.goal_params = {{"side", "left"}, {"value", 2.0}};
  c.solver.kind = core::SolverOptions::Kind::cg;
  const auto doc = config_to_json(c);
  const auto back = config_from_json(doc);
  EXPECT_EQ(config_to_json(back).dump(), doc.dump());
  EXPECT_EQ(back.mode, Mode::gmr_explicit);
  EXPECT_EQ(back.boundary.of(mesh::Side::left), mesh::EdgeSide::neumann);
}

TEST(Config, MissingFileIsConfigError) { EXPECT_THROW(load_config("/nonexistent/dpg.json"), ConfigError); }

TEST(RunAmr, UniformElementCounts) {
  const auto log = run_amr(small(Mode::uniform, 2));
  ASSERT_EQ(log.records.size(), 3u);
  EXPECT_EQ(log.records[0].elements, 4);
  EXPECT_EQ(log.records[1].elements, 16);
  EXPECT_EQ(log.records[2].elements, 64);
  EXPECT_EQ(log.records[0].dofs, 137);
  EXPECT_EQ(log.records[0].marked, 4);
  EXPECT_EQ(log.records[2].marked, 0);
}

TEST(RunAmr, EnergyDrivenModesNeverSolveTheDual) {
  for (Mode m : {Mode::uniform, Mode::smr}) {
    const long before = core::dual_solve_count();
    const auto log = run_amr(small(m, 3));
    EXPECT_EQ(core::dual_solve_count(), before) << to_string(m);
    for (const auto& r : log.records) EXPECT_TRUE(std::isnan(r.eta_star));
  }
  const long before = core::dual_solve_count();
  const auto log = run_amr(small(Mode::gmr_explicit, 2));
  EXPECT_EQ(core::dual_solve_count(), before + static_cast<long>(log.records.size()));
}

TEST(RunAmr, RespectsDofBudget) {
  RunConfig c = small(Mode::smr, 100);
  c.max_dof = 1500;
  const auto log = run_amr(c);
  ASSERT_GE(log.records.size(), 2u);
  for (std::size_t i = 0; i + 1 < log.records.size(); ++i) EXPECT_LT(log.records[i].dofs, c.max_dof);
  EXPECT_GE(log.records.back().dofs, c.max_dof);
  for (std::size_t i = 1; i < log.records.size(); ++i) EXPECT_GT(log.records[i].dofs, log.records[i - 1].dofs);
}

TEST(RunAmr, GoalOrientedModesImproveTheQoi) {
  for (Mode m : {Mode::gmr_explicit, Mode::gmr_implicit, Mode::gmr_adhoc}) {
    RunConfig c = small(m, 40);
    c.max_dof = 3000;
    const auto log = run_amr(c);
    ASSERT_GE(log.records.size(), 3u);
    EXPECT_LE(log.records.back().qoi_rel_err, log.records[1].qoi_rel_err) << to_string(m);
    for (const auto& r : log.records) EXPECT_TRUE(std::isfinite(r.eta_star));
  }
}

TEST(RunAmr, Deterministic) {
  const auto a = to_csv(run_amr(small(Mode::gmr_explicit, 4)));
  const auto b = to_csv(run_amr(small(Mode::gmr_explicit, 4)));
  EXPECT_EQ(a, b);
}

TEST(RunAmr, ZeroReferenceUsesInitialNormalization) {
  RunConfig c = small(Mode::smr, 2);
  c.boundary.sides[static_cast<int>(mesh::Side::left)] = mesh::EdgeSide::neumann;
  c.goal = "boundary_temperature";
  c.goal_params = {{"side", "left"}};
  const auto log = run_amr(c);
  EXPECT_EQ(log.normalization, "initial");
  EXPECT_DOUBLE_EQ(log.records[0].qoi_rel_err, 1.0);
}

TEST(Report, CsvLayout) {
  const auto log = run_amr(small(Mode::gmr_explicit, 2));
  const auto rows = lines_of(to_csv(log));
  ASSERT_EQ(rows.size(), log.records.size() + 1);
  EXPECT_EQ(rows[0], kCsvHeader);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(count(rows[i], ","), 8u);
  EXPECT_EQ(rows[1].rfind("0,137,4,", 0), 0u);
}

TEST(Report, EmitWritesAllOutputsAndReadsBack) {
  const auto log = run_amr(small(Mode::smr, 3));
  const auto dir = scratch("emit");
  emit_report(log, dir.string());
  for (const char* f : {"convergence.csv", "convergence.json", "convergence.svg"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto back = read_csv((dir / "convergence.csv").string());
  ASSERT_EQ(back.records.size(), log.records.size());
  for (std::size_t i = 0; i < log.records.size(); ++i) {
    EXPECT_EQ(back.records[i].dofs, log.records[i].dofs);
    EXPECT_EQ(back.records[i].elements, log.records[i].elements);
    // The CSV carries 12 significant digits.
    EXPECT_NEAR(back.records[i].qoi_rel_err, log.records[i].qoi_rel_err, 1e-11 * log.records[i].qoi_rel_err);
  }
  const auto json = nlohmann::json::parse(slurp(dir / "convergence.json"));
  EXPECT_EQ(json["mode"], "smr");
  fs::remove_all(dir);
}

TEST(Report, ReadCsvRejectsForeignHeader) {
  const auto dir = scratch("badcsv");
  fs::create_directories(dir);
  std::ofstream(dir / "x.csv") << "a,b,c\n1,2,3\n";
  EXPECT_THROW(read_csv((dir / "x.csv").string()), ConfigError);
  fs::remove_all(dir);
}

TEST(Report, SvgHasOneSeriesPerLog) {
  auto a = run_amr(small(Mode::smr, 2));
  auto b = run_amr(small(Mode::uniform, 2));
  const auto svg = to_svg({a, b});
  EXPECT_EQ(count(svg, "class=\"series\""), 2u);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
}

TEST(Report, ComparisonMatchesNearestDofCount) {
  ConvergenceLog ref, other;
  ref.label = "smr";
  other.label = "gmr";
  for (long d : {100, 200, 400, 800}) {
    IterationRecord r;
    r.dofs = d;
    r.qoi_rel_err = 1.0 / d;
    ref.records.push_back(r);
  }
  for (long d : {120, 390, 1000}) {
    IterationRecord r;
    r.dofs = d;
    r.qoi_rel_err = 0.1 / d;
    other.records.push_back(r);
  }
  const auto rows = lines_of(comparison_csv({ref, other}));
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NE(rows[1].find(",smr,100,"), std::string::npos);
  EXPECT_NE(rows[2].find(",smr,400,"), std::string::npos);
  EXPECT_NE(rows[3].find(",smr,800,"), std::string::npos);
}

TEST(Selftest, PassesAndIsReproducible) {
  SelftestOptions opt;
  opt.instances = 20;
  const auto a = run_selftest(opt);
  const auto b = run_selftest(opt);
  ASSERT_FALSE(a.empty());
  for (const auto& r : a) EXPECT_TRUE(r.ok()) << r.name << ": " << r.first_failure;
  EXPECT_EQ(format_selftest(a), format_selftest(b));
}

TEST(Selftest, FaultInjectionIsDetected) {
  SelftestOptions opt;
  opt.instances = 20;
  opt.skip_gram_symmetrization = true;
  bool any_fail = false;
  for (const auto& r : run_selftest(opt)) any_fail |= !r.ok();
  EXPECT_TRUE(any_fail);
}
