#include "dpg/driver/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "dpg/error.hpp"
#include "dpg/linalg/duality.hpp"
#include "dpg/linalg/random_instances.hpp"

namespace dpg::driver {

using namespace dpg::linalg;

namespace {

// One instance returns its relative violation; exceptions count as failures.
using Instance = std::function<double(Rng&, bool)>;

SuiteResult run_suite(const std::string& name, double tol, const Instance& body, std::uint64_t seed, int count,
                      bool fault) {
  SuiteResult r;
  r.name = name;
  r.tolerance = tol;
  r.instances = count;
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    double v = 0;
    std::string why;
    try {
      v = body(rng, !fault);
    } catch (const Error& e) {
      v = std::numeric_limits<double>::infinity();
      why = e.what();
    }
    if (!(v <= tol)) {
      if (r.first_failure.empty())
        r.first_failure = "instance " + std::to_string(i) + ": " + (why.empty() ? "violation " + std::to_string(v) : why);
    } else {
      ++r.passed;
    }
    if (!(v <= r.worst)) r.worst = v;
  }
  return r;
}

struct Dims {
  Index m, n, k, r;
};

// proper_trial keeps dim U_h < dim U; with U_h = U both sides of the inequalities are pure roundoff.
Dims random_dims(Rng& rng, bool proper_trial = false) {
  Dims d;
  d.n = rng.integer(2, 20);
  d.m = d.n + rng.integer(1, 15);
  d.k = rng.integer(1, int(d.n) - (proper_trial ? 1 : 0));
  d.r = rng.integer(int(d.k), int(d.m));
  return d;
}

double rel(double a, double scale) { return std::abs(a) / std::max(scale, 1e-300); }

}  // namespace

std::vector<SuiteResult> run_selftest(const SelftestOptions& opt) {
  std::vector<SuiteResult> out;
  const bool fault = opt.skip_gram_symmetrization;
  auto seed_for = [&](int suite) { return opt.seed + 7919ull * std::uint64_t(suite); };

  out.push_back(run_suite("dual-norm additivity over W0 + W0-perp", 1e-10, [](Rng& rng, bool sym) {
    const Index n = rng.integer(2, 40);
    GramMatrix g(random_spd(rng, n, sym));
    FunctionalVec f(rng.vector(n));
    SubspaceBasis w0(rng.matrix(n, rng.integer(1, int(n))));
    const auto s = split_dual_norm(g, f, w0);
    return rel(s.total_sq - s.part0_sq - s.part1_sq, s.total_sq);
  }, seed_for(1), opt.instances, fault));

  out.push_back(run_suite("energy residual decomposition", 1e-10, [](Rng& rng, bool sym) {
    const Dims d = random_dims(rng);
    const auto inst = random_duality_instance(rng, d.m, d.n, d.k, d.r, sym);
    const Vector uh = inst.trial * rng.vector(d.k);
    const auto e = energy_residual_identity(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load), uh,
                                            SubspaceBasis(inst.test));
    return rel(e.full_sq - e.remainder_sq - e.psi_sq, e.full_sq);
  }, seed_for(2), opt.instances, fault));

  out.push_back(run_suite("QoI error duality", 1e-10, [](Rng& rng, bool sym) {
    const Dims d = random_dims(rng);
    const auto inst = random_duality_instance(rng, d.m, d.n, d.k, d.r, sym);
    const auto s = qoi_duality_sides(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load),
                                     FunctionalVec(inst.goal), SubspaceBasis(inst.trial), SubspaceBasis(inst.test));
    return s.gap() / s.scale;
  }, seed_for(3), opt.instances, fault));

  out.push_back(run_suite("QoI error product bound", 1e-9, [](Rng& rng, bool sym) {
    const Dims d = random_dims(rng, true);
    const auto inst = random_duality_instance(rng, d.m, d.n, d.k, d.r, sym);
    const auto b = qoi_error_bound_check(OperatorMatrix(inst.b), GramMatrix(inst.gram), FunctionalVec(inst.load),
                                         FunctionalVec(inst.goal), SubspaceBasis(inst.trial), SubspaceBasis(inst.test));
    return std::max(0.0, b.lhs - b.rhs) / std::max(b.rhs, 1e-300);
  }, seed_for(4), opt.instances, fault));

  static constexpr Index kProjDims[4] = {2, 5, 10, 40};
  out.push_back(run_suite("complementary projection norms", 1e-8, [](Rng& rng, bool sym) {
    const Index n = kProjDims[rng.integer(0, 3)];
    GramMatrix g(random_spd(rng, n, sym));
    const auto p = projection_identities(OperatorMatrix(random_oblique_projection(rng, n)), g);
    return rel(p.norm_p - p.norm_complement, p.norm_p);
  }, seed_for(5), opt.instances, fault));

  out.push_back(run_suite("oblique vs orthogonal projection Pythagoras", 1e-8, [](Rng& rng, bool sym) {
    const Index n = kProjDims[rng.integer(0, 3)];
    GramMatrix g(random_spd(rng, n, sym));
    const auto p = projection_identities(OperatorMatrix(random_oblique_projection(rng, n)), g);
    return rel(p.norm_p_minus_orth * p.norm_p_minus_orth + 1 - p.norm_p * p.norm_p, p.norm_p * p.norm_p);
  }, seed_for(6), opt.instances, fault));

  out.push_back(run_suite("reliability and efficiency with a Fortin projection", 1e-9, [](Rng& rng, bool sym) {
    const Dims d = random_dims(rng, true);
    const auto inst = random_duality_instance(rng, d.m, d.n, d.k, d.r, sym);
    GramMatrix g(inst.gram);
    const Index extra = rng.integer(0, int(d.m - d.k - 1));
    const Matrix pi = fortin_projection(rng, inst.b, inst.gram, inst.trial, extra);
    const Vector uh = inst.trial * rng.vector(d.k);
    const auto r = reliability_report(OperatorMatrix(inst.b), g, FunctionalVec(inst.load), uh, OperatorMatrix(pi),
                                      SubspaceBasis(inst.trial));
    const double v1 = std::max(0.0, r.lhs - r.rhs) / std::max(r.rhs, 1e-300);
    const double v2 = std::max(0.0, r.efficiency_lhs - r.efficiency_rhs) / std::max(r.efficiency_rhs, 1e-300);
    const double v3 = std::max(0.0, r.osc_lhs - r.osc_rhs) / std::max(r.osc_rhs, 1e-300);
    return std::max({v1, v2, v3});
  }, seed_for(7), opt.instances, fault));
  return out;
}

std::string format_selftest(const std::vector<SuiteResult>& results) {
  std::ostringstream s;
  int failed = 0;
  for (const auto& r : results) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-4s %-52s %3d/%-3d worst %.3e (tol %.0e)", r.ok() ? "PASS" : "FAIL", r.name.c_str(),
                  r.passed, r.instances, r.worst, r.tolerance);
    s << buf << "\n";
    if (!r.ok()) {
      ++failed;
      s << "     first failure: " << r.first_failure << "\n";
    }
  }
  s << (failed == 0 ? "all suites passed" : std::to_string(failed) + " suite(s) failed") << "\n";
  return s.str();
}

}  // namespace dpg::driver
