#pragma once

#include <string>
#include <vector>

#include "dpg/core/dpg_system.hpp"
#include "dpg/goals/goals.hpp"

namespace dpg::estimators {

enum class IndicatorKind { energy, star_explicit, star_implicit, star_adhoc, product };
const char* to_string(IndicatorKind k);

struct IndicatorField {
  std::vector<double> values;  // by element id
  IndicatorKind kind = IndicatorKind::energy;
  double total() const;        // sqrt of the sum of squares
};

// eta_K = |psi_K| in the element Gram norm.
IndicatorField energy_indicators(const core::SolveState& state);

// Residual of the dual problem in L2 plus h_K-weighted edge jumps: normal jumps of tau and
// Neumann data mismatch in L2, jumps of v and Dirichlet data mismatch in H1 of the edge.
IndicatorField explicit_star_indicators(const core::SolveState& state, const goals::GoalSpec& goal);

// Local enriched residual problems with u-hat fixed to zero on each element boundary. Orders default
// to P = p + 1 and test order P + dp with the dp of the global test space.
IndicatorField implicit_star_indicators(const core::SolveState& state, const goals::GoalSpec& goal, int P = -1,
                                        int dp = -1);

// |g - omega|_K over the field components; volumetric goals only.
IndicatorField adhoc_star_indicators(const core::SolveState& state, const goals::GoalSpec& goal);

IndicatorField product_indicators(const IndicatorField& primal, const IndicatorField& dual);

}  // namespace dpg::estimators
