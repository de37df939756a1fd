#pragma once

#include <string>
#include <vector>

#include "dpg/driver/config.hpp"

namespace dpg::driver {

struct IterationRecord {
  int iter = 0;
  long dofs = 0;
  int elements = 0;
  double eta = 0;
  double eta_star = 0;  // NaN when no dual estimate was computed
  double qoi = 0;
  double qoi_rel_err = 0;
  long marked = 0;
  double wall_ms = 0;
  std::vector<double> eta_indicators;
  std::vector<double> eta_star_indicators;
};

struct ConvergenceLog {
  std::string label;
  std::string mode;
  std::string goal;
  double qoi_reference = 0;
  std::string normalization;  // "exact" or "initial"
  std::vector<IterationRecord> records;
};

ConvergenceLog run_amr(const RunConfig& config);

}  // namespace dpg::driver
