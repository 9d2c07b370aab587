#pragma once

#include <span>
#include <vector>

#include "woet/solver.hpp"

namespace woet {

enum class DualForm { lambda, lambda_r, rc };

// Candidate dual potentials. In the rc form only phi2 is carried; phi1 is
// implied as R_C applied to -phi2.
struct DualPair {
  std::vector<double> phi1;
  std::vector<double> phi2;
  DualForm form = DualForm::lambda;
};

struct DualFeasibility {
  bool feasible = false;
  double max_violation = 0.0;
};

// Feasibility of a Lambda pair: phi1(x) <= R_C(-phi2)(x) pointwise, which is
// exactly the constraint phi1(x1) + p(phi2) <= C(x1, p) over all p.
DualFeasibility feasibility_lambda(const ProblemSpec& spec,
                                   const DualPair& pair);

// sum_i mu_i(Fo(phi_i)) for a feasible Lambda pair.
double dual_value_lambda(const ProblemSpec& spec, const DualPair& pair);

// sum_i mu_i(phi_i) for a feasible Lambda_R pair (constraints via R*).
double dual_value_lambda_r(const ProblemSpec& spec, const DualPair& pair);

// Lift a Lambda_R pair to the Lambda form through phi -> R*(phi).
DualPair lift_lambda_r(const ProblemSpec& spec, const DualPair& pair);

// The R_C-form dual objective; a valid lower bound on the primal value for
// any finite phi.
double dual_value_rc(const ProblemSpec& spec, std::span<const double> phi);

struct DualAscentResult {
  std::vector<double> phi;
  double bound = 0.0;
  bool hypotheses_met = true;   // both entropies superlinear
  bool primal_infeasible = false;
  bool hit_iter_limit = false;
};

// Maximise the R_C-form dual over phi. `seed_col_duals`, when nonempty,
// supplies column multipliers (e.g. from the LP subsolver) used to warm
// start the search.
DualAscentResult dual_ascent_rc(const ProblemSpec& spec,
                                std::span<const double> seed_col_duals = {});

// primal_value minus the best certified lower bound (fresh ascent plus any
// supplied pairs evaluated in their own form).
double duality_gap(const ProblemSpec& spec, const SolveReport& report,
                   std::span<const DualPair> extra_pairs = {});

}  // namespace woet
