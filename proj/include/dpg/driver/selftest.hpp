#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dpg::driver {

struct SuiteResult {
  std::string name;
  int instances = 0;
  int passed = 0;
  double worst = 0;       // largest relative violation seen
  double tolerance = 0;
  std::string first_failure;
  bool ok() const { return passed == instances; }
};

struct SelftestOptions {
  std::uint64_t seed = 20240601;
  int instances = 100;
  bool skip_gram_symmetrization = false;  // fault injection
};

std::vector<SuiteResult> run_selftest(const SelftestOptions& opt);
std::string format_selftest(const std::vector<SuiteResult>& results);

}  // namespace dpg::driver
