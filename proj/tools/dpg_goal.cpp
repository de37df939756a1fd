// dpg-goal: adaptive DPG/DPG* runs, operator-lab self-test, and log comparison.
#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "dpg/driver/amr.hpp"
#include "dpg/driver/config.hpp"
#include "dpg/driver/report.hpp"
#include "dpg/driver/selftest.hpp"
#include "dpg/error.hpp"

namespace {

int run(const std::string& config_path, const std::optional<std::string>& mode, const std::optional<double>& theta,
        const std::optional<double>& alpha, const std::optional<int>& p, const std::optional<int>& dp,
        const std::optional<long>& max_dof, const std::optional<int>& max_iters, const std::optional<std::string>& out,
        bool timing) {
  using namespace dpg::driver;
  RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
  if (mode) c.mode = mode_from_string(*mode);
  if (theta) c.theta = *theta;
  if (alpha) c.alpha = *alpha;
  if (p) c.p = *p;
  if (dp) c.dp = *dp;
  if (max_dof) c.max_dof = *max_dof;
  if (max_iters) c.max_iters = *max_iters;
  if (out) c.output_dir = *out;
  if (timing) c.timing = true;
  validate(c);
  const ConvergenceLog log = run_amr(c);
  emit_report(log, c.output_dir);
  const auto& last = log.records.back();
  std::cout << "mode " << log.mode << ", goal " << log.goal << ": " << log.records.size() << " iterations, final dofs "
            << last.dofs << ", eta " << last.eta << ", QoI rel. error " << last.qoi_rel_err << "\n"
            << "wrote " << c.output_dir << "/convergence.{csv,json,svg}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-oriented adaptive DPG for 2D ultraweak Poisson"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Run the adaptive loop from a JSON config");
  std::string config_path;
  std::optional<std::string> mode, out;
  std::optional<double> theta, alpha;
  std::optional<int> p, dp, max_iters;
  std::optional<long> max_dof;
  bool timing = false;
  run_cmd->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  run_cmd->add_option("--mode", mode, "uniform | smr | gmr_explicit | gmr_implicit | gmr_adhoc");
  run_cmd->add_option("--theta", theta, "marking fraction in (0,1)");
  run_cmd->add_option("--alpha", alpha, "graph-norm parameter");
  run_cmd->add_option("--p", p, "trial order");
  run_cmd->add_option("--dp", dp, "test enrichment");
  run_cmd->add_option("--max-dof", max_dof, "dof budget");
  run_cmd->add_option("--max-iters", max_iters, "refinement cap");
  run_cmd->add_option("--out", out, "output directory");
  run_cmd->add_flag("--timing", timing, "record wall time per iteration (makes the CSV nondeterministic)");

  auto* self_cmd = app.add_subcommand("selftest", "Run the finite-dimensional identity suites");
  dpg::driver::SelftestOptions sopt;
  self_cmd->add_option("--seed", sopt.seed, "random seed");
  self_cmd->add_option("--instances", sopt.instances, "instances per suite")->check(CLI::PositiveNumber);
  self_cmd->add_flag("--inject-fault", sopt.skip_gram_symmetrization, "skip Gram symmetrization (negative control)");

  auto* cmp_cmd = app.add_subcommand("compare", "Merge convergence logs into one plot");
  std::string cmp_out = "compare";
  std::vector<std::string> logs;
  cmp_cmd->add_option("--out", cmp_out, "output directory");
  cmp_cmd->add_option("logs", logs, "convergence.csv files; the first is the reference")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run_cmd) return run(config_path, mode, theta, alpha, p, dp, max_dof, max_iters, out, timing);
    if (*self_cmd) {
      const auto results = dpg::driver::run_selftest(sopt);
      std::cout << "seed " << sopt.seed << "\n" << dpg::driver::format_selftest(results);
      for (const auto& r : results)
        if (!r.ok()) return 2;
      return 0;
    }
    if (*cmp_cmd) {
      std::vector<dpg::driver::ConvergenceLog> parsed;
      for (const auto& l : logs) parsed.push_back(dpg::driver::read_csv(l));
      dpg::driver::emit_comparison(parsed, cmp_out);
      std::cout << dpg::driver::comparison_csv(parsed);
      return 0;
    }
  } catch (const dpg::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const dpg::Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
