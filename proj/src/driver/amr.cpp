#include "dpg/driver/amr.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "dpg/error.hpp"
#include "dpg/estimators/indicators.hpp"
#include "dpg/goals/goals.hpp"

namespace dpg::driver {

namespace {

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

}  // namespace

ConvergenceLog run_amr(const RunConfig& config) {
  validate(config);
  const auto exact = goals::steep_manufactured();
  auto msh = std::make_shared<const mesh::QuadMesh>(mesh::build_rect_mesh(config.domain, config.nx, config.ny, config.boundary));

  const goals::GoalSpec goal = goals::make_goal(config.goal, config.goal_params, *msh);
  goals::check_regularity(goal, msh->boundary_spec());
  const goals::GoalSpec dual_goal = config.mode == Mode::gmr_adhoc ? goals::adhoc_surrogate(goal) : goal;

  ConvergenceLog log;
  log.mode = to_string(config.mode);
  log.goal = config.goal;
  log.label = log.mode;
  log.qoi_reference = goals::exact_qoi(goal, exact);
  const bool normalize_initial = std::abs(log.qoi_reference) <= 1e-12;
  log.normalization = normalize_initial ? "initial" : "exact";
  double initial_qoi = std::numeric_limits<double>::quiet_NaN();

  fe::BoundaryData data;
  data.neumann_flux = [exact](mesh::Point x, mesh::Point n) { return exact.flux(x, n); };
  const core::SourceFn source = [exact](double x, double y) { return exact.source(x, y); };

  for (int iter = 0;; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.iter = iter;
    try {
      const goals::GoalSpec g_now = goals::mesh_dependent_update(goal, *msh);
      core::Discretization disc;
      disc.mesh = msh;
      disc.trial = fe::build_trial_space(msh, config.p, data);
      disc.test = fe::build_test_space(msh, config.p, config.dp);
      disc.alpha = config.alpha;
      const auto primal = core::solve_primal(core::assemble_global(disc, source, config.solver));
      const auto eta = estimators::energy_indicators(primal);

      rec.dofs = disc.trial->num_dofs();
      rec.elements = msh->num_elements();
      rec.eta = eta.total();
      rec.eta_indicators = eta.values;
      rec.qoi = goals::evaluate_qoi(g_now, *disc.trial, primal.u_coeffs);
      if (iter == 0) initial_qoi = rec.qoi;
      if (normalize_initial)
        rec.qoi_rel_err = std::abs(rec.qoi) / std::abs(initial_qoi);
      else
        rec.qoi_rel_err = std::abs(rec.qoi - log.qoi_reference) / std::abs(log.qoi_reference);

      std::vector<double> driving = eta.values;
      rec.eta_star = std::numeric_limits<double>::quiet_NaN();
      if (is_goal_oriented(config.mode)) {
        const goals::GoalSpec dg = goals::mesh_dependent_update(dual_goal, *msh);
        const auto gv = goals::goal_load_vector(dg, *disc.trial);
        const auto dual = core::solve_dual(disc, gv.free, primal);
        estimators::IndicatorField star;
        if (config.mode == Mode::gmr_explicit)
          star = estimators::explicit_star_indicators(dual, dg);
        else if (config.mode == Mode::gmr_implicit)
          star = estimators::implicit_star_indicators(dual, dg);
        else
          star = estimators::adhoc_star_indicators(dual, dg);
        rec.eta_star = star.total();
        rec.eta_star_indicators = star.values;
        driving = estimators::product_indicators(eta, star).values;
      }

      if (!log.records.empty() && rec.dofs <= log.records.back().dofs)
        throw NumericalError("dof count did not grow (" + std::to_string(log.records.back().dofs) + " -> " +
                             std::to_string(rec.dofs) + ")");

      const bool stop = rec.dofs >= config.max_dof || iter == config.max_iters || max_of(driving) <= 1e-14;
      mesh::MarkedSet marked;
      if (!stop) {
        marked = config.mode == Mode::uniform ? mesh::mark_all(*msh) : mesh::mark_greedy(driving, config.theta);
        rec.marked = static_cast<long>(marked.size());
      }
      if (config.timing)
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      log.records.push_back(std::move(rec));
      if (stop || marked.empty()) break;
      msh = std::make_shared<const mesh::QuadMesh>(mesh::refine(*msh, marked));
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(iter) + ": " + e.what());
    }
  }
  return log;
}

}  // namespace dpg::driver
