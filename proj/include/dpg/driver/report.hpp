#pragma once

#include <string>
#include <vector>

#include "dpg/driver/amr.hpp"

namespace dpg::driver {

inline constexpr const char* kCsvHeader = "iter,dofs,elements,eta,eta_star,qoi,qoi_rel_err,marked,wall_ms";

std::string to_csv(const ConvergenceLog& log);
std::string to_json(const ConvergenceLog& log);
// Log-log QoI relative error against dofs, one series per log.
std::string to_svg(const std::vector<ConvergenceLog>& logs);

// Writes convergence.csv, convergence.json and convergence.svg.
void emit_report(const ConvergenceLog& log, const std::string& output_dir);

ConvergenceLog read_csv(const std::string& path);

// Matches every point of logs[1..] to the point of logs[0] with the nearest dof count.
std::string comparison_csv(const std::vector<ConvergenceLog>& logs);
void emit_comparison(const std::vector<ConvergenceLog>& logs, const std::string& output_dir);

}  // namespace dpg::driver
