#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "woet/cost.hpp"
#include "woet/entropy.hpp"
#include "woet/extended_real.hpp"
#include "woet/measures.hpp"

namespace woet {

struct SolverOptions {
  double tol_gap = 1e-6;        // absolute and relative gap target
  std::size_t max_iter = 50000;
  double mass_cap = 0.0;        // <= 0 selects the automatic cap
  std::uint64_t seed = 0;
  bool certify = true;          // run dual ascent to bound the gap
};

enum class SolveStatus { optimal, feasible, infeasible, iter_limit };

std::string to_string(SolveStatus s);

// Lemma-level feasibility diagnostics: the necessary mass condition
// K = m1 D(F1) /\ m2 D(F2) plus the two sufficient conditions.
struct FeasibilityReport {
  bool k_nonempty = false;
  double k_lo = 0.0;
  double k_hi = 0.0;
  bool f0_finite = false;        // sufficient condition (i)
  bool separable_bound = false;  // cost admits C(x1,p) <= B1(x1) + p(B2)
  bool cond_ii = false;
  bool feasible_sufficient = false;
  bool provably_infeasible = false;
  std::string note;
};

struct CoercivityReport {
  bool superlinear = false;  // both recession constants infinite
  bool compact = false;      // finite ground + F1'inf + F2'inf + inf C > 0
  bool ok = false;
};

struct ProblemSpec {
  ProblemSpec(DiscreteMeasure mu1_in, DiscreteMeasure mu2_in,
              EntropyFunction f1_in, EntropyFunction f2_in, WeakCost cost_in,
              SolverOptions options_in = {});

  DiscreteMeasure mu1;
  DiscreteMeasure mu2;
  EntropyFunction f1;
  EntropyFunction f2;
  WeakCost cost;
  SolverOptions options;

  double resolved_mass_cap() const;
};

struct SolveDiagnostics {
  FeasibilityReport feasibility;
  CoercivityReport coercivity;
  std::size_t iterations = 0;
  double martingale_residual = 0.0;  // max row residual, absolute
  std::string method;
};

struct SolveReport {
  Coupling coupling;
  double primal_value = 0.0;
  std::optional<double> dual_bound;
  std::optional<double> gap;
  std::vector<double> dual_phi;  // R_C-form certificate when dual_bound is set
  SolveStatus status = SolveStatus::feasible;
  SolveDiagnostics diagnostics;
};

// Full primal objective of a candidate coupling; +inf propagates.
ExtendedReal objective(const ProblemSpec& spec, const Coupling& gamma);

FeasibilityReport check_feasibility(const ProblemSpec& spec);
CoercivityReport check_coercivity(const ProblemSpec& spec);

// Minimise the primal objective over nonnegative couplings. Pure-indicator
// instances with linear-type costs are solved exactly by the LP subsolver;
// everything else runs an accelerated projected-gradient loop. The returned
// value is always the exact objective recomputed at the returned coupling.
SolveReport solve(const ProblemSpec& spec);

// Exhaustive grid oracle for tiny instances (rows*cols <= 9), with local
// refinement around the incumbent. Independent of solve(): it enumerates
// couplings directly and evaluates objective().
std::pair<double, Coupling> oracle_solve(const ProblemSpec& spec,
                                         double grid_step, double mass_max);

struct MonotonicityReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_violation = 0.0;  // positive means improvement found
};

// Two-row C-monotonicity probe: random redistributions of two conditionals
// must not lower the summed weak cost at an optimal plan.
MonotonicityReport c_monotonicity_check(const ProblemSpec& spec,
                                        const Coupling& gamma,
                                        std::size_t trials, std::uint64_t seed);

}  // namespace woet
