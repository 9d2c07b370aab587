#pragma once

#include <vector>

#include "woet/solver.hpp"

namespace woet {

// Martingale problem data: both marginals live on one 1-D ground set and the
// coupling must keep each conditional mean at its source point.
struct MartingaleSpec {
  MartingaleSpec(GroundPtr x_in, DiscreteMeasure mu1_in,
                 DiscreteMeasure mu2_in, EntropyFunction f1_in,
                 EntropyFunction f2_in, std::vector<double> c_in,
                 SolverOptions options_in = {});

  GroundPtr x;
  DiscreteMeasure mu1;
  DiscreteMeasure mu2;
  EntropyFunction f1;
  EntropyFunction f2;
  std::vector<double> c;  // |X| x |X|, entries may be +inf
  SolverOptions options;

  double c_at(std::size_t i, std::size_t j) const {
    return c[i * x->size() + j];
  }
  // The equivalent weak problem with the martingale cost.
  ProblemSpec to_problem() const;
};

// Atom of a plan lifted to (X x [0, inf))^2; spatial coordinates are ground
// indices so pushforwards accumulate exactly.
struct LiftedAtom {
  std::size_t i1 = 0;
  double r1 = 0.0;
  std::size_t i2 = 0;
  double r2 = 0.0;
  double weight = 0.0;
};

struct LiftedPlan {
  GroundPtr ground;
  std::vector<LiftedAtom> atoms;
  double p = 1.0;  // homogeneity exponent, p > 0
};

struct DualTripleM {
  std::vector<double> phi1;
  std::vector<double> phi2;
  std::vector<double> h;  // martingale multiplier over X1
};

SolveReport solve_moet(const MartingaleSpec& spec);

// sum_i mu_i(Fo(phi_i)) under the pointwise constraint
// phi1(x1) + phi2(x2) + h(x1)(x2 - x1) <= c(x1, x2).
double dual_value_lambda_m(const MartingaleSpec& spec,
                           const DualTripleM& triple);

struct TripleAscentResult {
  DualTripleM triple;
  double bound = 0.0;
  bool converged = false;
};

// Maximise the Lambda_M dual over (phi2, h); phi1 is implied by the
// martingale c-transform.
TripleAscentResult ascent_lambda_m(const MartingaleSpec& spec);

// Marginal perspective cost
// H(x1, r1; x2, r2) = inf_{theta > 0} r1 F1(theta/r1) + r2 F2(theta/r2)
//                     + theta c12,
// with r F(theta/r) = theta F'_inf at r = 0, and the off-domain clause
// F1(0) r1 + F2(0) r2 when c12 = +inf.
ExtendedReal perspective_cost_h(const EntropyFunction& f1,
                                const EntropyFunction& f2, double r1,
                                double r2, ExtendedReal c12);

// h_i^p(alpha): pushforward of r_i^p * weight onto the i-th coordinate.
DiscreteMeasure homogeneous_marginal(const LiftedPlan& plan, int side);

// Lifted objective sum_atoms w H(x1, r1^p; x2, r2^p)
//                 + F1(0) (mu1 - h_1^p(alpha))(X),
// after checking h_i^p <= mu_i and the grid-indicator martingale moments.
ExtendedReal homogeneous_objective(const MartingaleSpec& spec,
                                   const LiftedPlan& plan);

// Canonical lift (x1, rho1^{1/p}(x1); x2, 1) of a feasible plan.
LiftedPlan canonical_lift(const MartingaleSpec& spec, const Coupling& gamma,
                          double p);

struct HomogeneousReport {
  double p = 1.0;
  double primal_value = 0.0;        // E_M via solve_moet
  double h_functional = 0.0;        // curly-H evaluated at the optimal plan
  double lifted_objective = 0.0;    // homogeneous objective of the lift
  double max_discrepancy = 0.0;
  SolveReport solve_report;
};

// Three-way agreement check between the martingale value, the marginal
// perspective functional and the lifted homogeneous objective. Requires
// F2 = indicator and c >= 0.
HomogeneousReport check_homogeneous_equivalence(const MartingaleSpec& spec,
                                                double p);

}  // namespace woet
