#pragma once

#include <memory>

#include "dpg/core/dpg_system.hpp"
#include "dpg/goals/manufactured.hpp"
#include "dpg/mesh/quad_mesh.hpp"

namespace dpg::testing {

inline std::shared_ptr<const mesh::QuadMesh> share(mesh::QuadMesh m) {
  return std::make_shared<const mesh::QuadMesh>(std::move(m));
}

inline mesh::QuadMesh uniform(mesh::QuadMesh m, int levels) {
  for (int i = 0; i < levels; ++i) m = mesh::refine(m, mesh::mark_all(m));
  return m;
}

inline core::Discretization make_disc(std::shared_ptr<const mesh::QuadMesh> m, int p, int dp, double alpha = 1.0,
                                      const fe::BoundaryData& data = {}) {
  core::Discretization d;
  d.mesh = m;
  d.trial = fe::build_trial_space(m, p, data);
  d.test = fe::build_test_space(m, p, dp);
  d.alpha = alpha;
  return d;
}

inline fe::BoundaryData neumann_data(const goals::ManufacturedSolution& exact) {
  fe::BoundaryData data;
  data.neumann_flux = [exact](mesh::Point x, mesh::Point n) { return exact.flux(x, n); };
  return data;
}

inline core::SourceFn source_of(const goals::ManufacturedSolution& exact) {
  return [exact](double x, double y) { return exact.source(x, y); };
}

}  // namespace dpg::testing
