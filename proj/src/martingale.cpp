#include "woet/martingale.hpp"

#include <algorithm>
#include <cmath>

#include "woet/detail/powell.hpp"
#include "woet/errors.hpp"

namespace woet {

using xreal::kInf;

MartingaleSpec::MartingaleSpec(GroundPtr x_in, DiscreteMeasure mu1_in,
                               DiscreteMeasure mu2_in, EntropyFunction f1_in,
                               EntropyFunction f2_in, std::vector<double> c_in,
                               SolverOptions options_in)
    : x(std::move(x_in)),
      mu1(std::move(mu1_in)),
      mu2(std::move(mu2_in)),
      f1(f1_in),
      f2(f2_in),
      c(std::move(c_in)),
      options(options_in) {
  if (!x->is_1d()) {
    throw ValidationError("martingale problems require a 1-D ground set");
  }
  if (mu1.ground() != x || mu2.ground() != x) {
    throw GroundMismatch("martingale measures must share the ground set");
  }
  if (c.size() != x->size() * x->size()) {
    throw ShapeMismatch("martingale cost matrix must be |X| x |X|");
  }
  for (double v : c) {
    if (std::isnan(v) || v == -kInf) {
      throw ValidationError("martingale cost entries must be > -inf");
    }
  }
  if (!(f1.recession() > 0.0)) {
    throw ValidationError("martingale problems require F1'_inf > 0");
  }
}

ProblemSpec MartingaleSpec::to_problem() const {
  return ProblemSpec(mu1, mu2, f1, f2, WeakCost::martingale(x, c), options);
}

SolveReport solve_moet(const MartingaleSpec& spec) {
  // Cheap necessary support condition in the doubly-pinned case: each source
  // point must lie in the convex hull of the target support.
  if (spec.f1.kind() == EntropyKind::indicator_one &&
      spec.f2.kind() == EntropyKind::indicator_one) {
    double lo = kInf, hi = -kInf;
    for (std::size_t j = 0; j < spec.x->size(); ++j) {
      if (spec.mu2.weight(j) > kZeroMass) {
        lo = std::min(lo, spec.x->coord(j));
        hi = std::max(hi, spec.x->coord(j));
      }
    }
    for (std::size_t i = 0; i < spec.x->size(); ++i) {
      if (spec.mu1.weight(i) > kZeroMass &&
          (spec.x->coord(i) < lo || spec.x->coord(i) > hi)) {
        throw InfeasibleProblem(
            "source support leaves the convex hull of the target support");
      }
    }
  }
  return solve(spec.to_problem());
}

double dual_value_lambda_m(const MartingaleSpec& spec,
                           const DualTripleM& triple) {
  const std::size_t n = spec.x->size();
  if (triple.phi1.size() != n || triple.phi2.size() != n ||
      triple.h.size() != n) {
    throw ShapeMismatch("triple components must match the ground set");
  }
  double cmax = 0.0;
  for (double v : spec.c) {
    if (std::isfinite(v)) cmax = std::max(cmax, std::abs(v));
  }
  const double tol = 1e-9 * (1.0 + cmax);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double cij = spec.c_at(i, j);
      if (cij == kInf) continue;
      const double lhs = triple.phi1[i] + triple.phi2[j] +
                         triple.h[i] * (spec.x->coord(j) - spec.x->coord(i));
      if (lhs > cij + tol) {
        throw InfeasibleTriple("constraint violated at (" + std::to_string(i) +
                               "," + std::to_string(j) + ") by " +
                               std::to_string(lhs - cij));
      }
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += xreal::mass_mul(spec.mu1.weight(i), spec.f1.fcirc(triple.phi1[i]));
    total += xreal::mass_mul(spec.mu2.weight(i), spec.f2.fcirc(triple.phi2[i]));
  }
  return total;
}

TripleAscentResult ascent_lambda_m(const MartingaleSpec& spec) {
  const std::size_t n = spec.x->size();
  // parameterise (phi2, h); phi1 is the martingale c-transform
  auto implied_phi1 = [&](const std::vector<double>& v, std::size_t i) {
    double best = kInf;
    for (std::size_t j = 0; j < n; ++j) {
      const double cij = spec.c_at(i, j);
      if (cij == kInf) continue;
      best = std::min(best, cij - v[j] -
                                v[n + i] * (spec.x->coord(j) -
                                            spec.x->coord(i)));
    }
    return best;
  };
  auto g = [&](const std::vector<double>& v) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += xreal::mass_mul(spec.mu1.weight(i),
                               spec.f1.fcirc_ext(implied_phi1(v, i)));
      total += xreal::mass_mul(spec.mu2.weight(i), spec.f2.fcirc(v[i]));
    }
    return total;
  };

  std::vector<double> v(2 * n, 0.0);
  detail::PowellOptions popts;
  popts.max_sweeps = 160;
  double cscale = 0.0;
  for (double c : spec.c) {
    if (std::isfinite(c)) cscale = std::max(cscale, std::abs(c));
  }
  popts.initial_step = 0.25 * (1.0 + cscale);
  const detail::PowellResult pr = detail::powell_maximize(g, &v, popts);

  TripleAscentResult out;
  out.bound = pr.value;
  out.converged = pr.converged;
  out.triple.phi2.assign(v.begin(), v.begin() + n);
  out.triple.h.assign(v.begin() + n, v.end());
  out.triple.phi1.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p1 = implied_phi1(v, i);
    // keep reported potentials finite
    out.triple.phi1[i] = (p1 == kInf) ? 1e30 : p1;
  }
  return out;
}

ExtendedReal perspective_cost_h(const EntropyFunction& f1,
                                const EntropyFunction& f2, double r1,
                                double r2, ExtendedReal c12) {
  if (r1 < 0.0 || r2 < 0.0) {
    throw NegativeArgument("perspective_cost_h requires r1, r2 >= 0");
  }
  if (c12 == kInf) {
    return xreal::mass_mul(r1, f1.value_at_zero()) +
           xreal::mass_mul(r2, f2.value_at_zero());
  }
  // A zero mass with a superlinear entropy makes every theta > 0 infinitely
  // expensive, so the infimum over the open half-line is +inf.
  if ((r1 == 0.0 && f1.recession() == kInf) ||
      (r2 == 0.0 && f2.recession() == kInf)) {
    return kInf;
  }

  // theta-domain: intersection of r_i * D(F_i); zero masses with finite
  // recession contribute a linear term instead.
  double lo = 0.0, hi = kInf;
  double linear = c12;
  if (r1 == 0.0) {
    linear += f1.recession();
  } else {
    double dlo, dhi;
    f1.domain(&dlo, &dhi);
    lo = std::max(lo, r1 * dlo);
    hi = std::min(hi, dhi == kInf ? kInf : r1 * dhi);
  }
  if (r2 == 0.0) {
    linear += f2.recession();
  } else {
    double dlo, dhi;
    f2.domain(&dlo, &dhi);
    lo = std::max(lo, r2 * dlo);
    hi = std::min(hi, dhi == kInf ? kInf : r2 * dhi);
  }
  if (lo > hi * (1.0 + 1e-12) + 1e-300) return kInf;

  auto g = [&](double theta) -> double {
    double v = linear * theta;
    if (r1 > 0.0) {
      const ExtendedReal t = f1.value(theta / r1);
      if (t == kInf) return kInf;
      v += r1 * t;
    }
    if (r2 > 0.0) {
      const ExtendedReal t = f2.value(theta / r2);
      if (t == kInf) return kInf;
      v += r2 * t;
    }
    return v;
  };

  double best = kInf;
  if (lo == 0.0) {
    // theta -> 0+ limit
    double limit = 0.0;
    if (r1 > 0.0) limit += xreal::mass_mul(r1, f1.value_at_zero());
    if (r2 > 0.0) limit += xreal::mass_mul(r2, f2.value_at_zero());
    best = limit;
  }

  double a = std::max(lo, 1e-12 * (1.0 + r1 + r2));
  double b = hi;
  if (b == kInf) {
    // superlinear growth: expand until the slope turns positive
    b = std::max(2.0 * a, 2.0 * (r1 + r2 + 1.0));
    double gb = g(b);
    for (int it = 0; it < 200; ++it) {
      const double b2 = 2.0 * b;
      const double g2 = g(b2);
      if (g2 > gb) break;
      b = b2;
      gb = g2;
    }
    b *= 2.0;
  }
  if (a > b) a = std::max(lo, 0.0);
  if (a <= b) {
    constexpr double kGolden = 0.6180339887498949;
    double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
    double g1 = g(x1), g2v = g(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + b); ++it) {
      if (g1 <= g2v) {
        b = x2;
        x2 = x1;
        g2v = g1;
        x1 = b - kGolden * (b - a);
        g1 = g(x1);
      } else {
        a = x1;
        x1 = x2;
        g1 = g2v;
        x2 = a + kGolden * (b - a);
        g2v = g(x2);
      }
    }
    best = std::min({best, g1, g2v, g(0.5 * (a + b))});
    // domain endpoints matter for indicator-type entropies
    best = std::min({best, g(std::max(lo, 1e-300)), g(hi == kInf ? b : hi)});
  }
  return best;
}

DiscreteMeasure homogeneous_marginal(const LiftedPlan& plan, int side) {
  if (side != 1 && side != 2) {
    throw ValidationError("side must be 1 or 2");
  }
  std::vector<double> w(plan.ground->size(), 0.0);
  for (const LiftedAtom& atom : plan.atoms) {
    const std::size_t idx = (side == 1) ? atom.i1 : atom.i2;
    const double r = (side == 1) ? atom.r1 : atom.r2;
    if (idx >= w.size()) throw ValidationError("atom index out of range");
    w[idx] += std::pow(r, plan.p) * atom.weight;
  }
  return DiscreteMeasure(plan.ground, std::move(w));
}

ExtendedReal homogeneous_objective(const MartingaleSpec& spec,
                                   const LiftedPlan& plan) {
  if (plan.ground != spec.x) {
    throw GroundMismatch("plan must live on the problem ground set");
  }
  if (!(plan.p > 0.0)) {
    throw ValidationError("homogeneity exponent must be positive");
  }
  const DiscreteMeasure h1 = homogeneous_marginal(plan, 1);
  const DiscreteMeasure h2 = homogeneous_marginal(plan, 2);
  const double scale1 = 1.0 + spec.mu1.total_mass();
  const double scale2 = 1.0 + spec.mu2.total_mass();
  for (std::size_t i = 0; i < spec.x->size(); ++i) {
    if (h1.weight(i) > spec.mu1.weight(i) + 1e-9 * scale1) {
      throw ConstraintViolated("h_1^p exceeds mu1 at point " +
                               std::to_string(i));
    }
    if (h2.weight(i) > spec.mu2.weight(i) + 1e-9 * scale2) {
      throw ConstraintViolated("h_2^p exceeds mu2 at point " +
                               std::to_string(i));
    }
  }
  // martingale moments against the indicator test family
  const double spread = std::max(spec.x->spread_1d(), 1e-30);
  std::vector<double> moment(spec.x->size(), 0.0);
  double wmass = 0.0;
  for (const LiftedAtom& atom : plan.atoms) {
    moment[atom.i1] += atom.weight * (spec.x->coord(atom.i2) -
                                      spec.x->coord(atom.i1));
    wmass += atom.weight;
  }
  for (std::size_t i = 0; i < moment.size(); ++i) {
    if (std::abs(moment[i]) > 1e-9 * spread * (1.0 + wmass)) {
      throw ConstraintViolated("martingale moment violated at point " +
                               std::to_string(i));
    }
  }

  double total = 0.0;
  for (const LiftedAtom& atom : plan.atoms) {
    if (atom.weight <= 0.0) continue;
    const ExtendedReal h = perspective_cost_h(
        spec.f1, spec.f2, std::pow(atom.r1, plan.p),
        std::pow(atom.r2, plan.p), spec.c_at(atom.i1, atom.i2));
    if (h == kInf) return kInf;
    total += atom.weight * h;
  }
  double mu1_rest = spec.mu1.total_mass() - h1.total_mass();
  if (std::abs(mu1_rest) <= 1e-9 * scale1) mu1_rest = 0.0;
  total += xreal::mass_mul(mu1_rest, spec.f1.value_at_zero());
  return total;
}

LiftedPlan canonical_lift(const MartingaleSpec& spec, const Coupling& gamma,
                          double p) {
  if (gamma.rows() != spec.x || gamma.cols() != spec.x) {
    throw GroundMismatch("coupling must live on the problem ground set");
  }
  auto [g1, g2] = marginals(gamma);
  const LebesgueDecomposition rho1 = lebesgue_decompose(spec.mu1, g1);
  LiftedPlan plan;
  plan.ground = spec.x;
  plan.p = p;
  for (std::size_t i = 0; i < gamma.n_rows(); ++i) {
    for (std::size_t j = 0; j < gamma.n_cols(); ++j) {
      if (gamma(i, j) <= 0.0) continue;
      LiftedAtom atom;
      atom.i1 = i;
      atom.i2 = j;
      atom.r1 = std::pow(rho1.density[i], 1.0 / p);
      atom.r2 = 1.0;
      atom.weight = gamma(i, j);
      plan.atoms.push_back(atom);
    }
  }
  return plan;
}

HomogeneousReport check_homogeneous_equivalence(const MartingaleSpec& spec,
                                                double p) {
  if (spec.f2.kind() != EntropyKind::indicator_one) {
    throw HypothesesNotMet("homogeneous equivalence requires F2 = indicator");
  }
  for (double v : spec.c) {
    if (v < 0.0) {
      throw HypothesesNotMet("homogeneous equivalence requires c >= 0");
    }
  }
  if (!(p > 0.0)) {
    throw ValidationError("p must be positive");
  }

  HomogeneousReport rep;
  rep.p = p;
  rep.solve_report = solve_moet(spec);
  rep.primal_value = rep.solve_report.primal_value;
  const Coupling& gamma = rep.solve_report.coupling;

  // curly-H at the optimal plan, with the reverse-direction densities
  auto [g1, g2] = marginals(gamma);
  const LebesgueDecomposition rho1 = lebesgue_decompose(spec.mu1, g1);
  const LebesgueDecomposition rho2 = lebesgue_decompose(spec.mu2, g2);
  double hval = 0.0;
  for (std::size_t i = 0; i < gamma.n_rows() && hval < kInf; ++i) {
    for (std::size_t j = 0; j < gamma.n_cols(); ++j) {
      if (gamma(i, j) <= 0.0) continue;
      const ExtendedReal h =
          perspective_cost_h(spec.f1, spec.f2, rho1.density[i],
                             rho2.density[j], spec.c_at(i, j));
      if (h == kInf) {
        hval = kInf;
        break;
      }
      hval += gamma(i, j) * h;
    }
  }
  if (hval < kInf) {
    const double scale1 = 1.0 + spec.mu1.total_mass();
    const double scale2 = 1.0 + spec.mu2.total_mass();
    double perp1 = rho1.singular_mass;
    double perp2 = rho2.singular_mass;
    if (perp1 <= 1e-9 * scale1) perp1 = 0.0;
    if (perp2 <= 1e-9 * scale2) perp2 = 0.0;
    hval += xreal::mass_mul(perp1, spec.f1.value_at_zero());
    hval += xreal::mass_mul(perp2, spec.f2.value_at_zero());
  }
  rep.h_functional = hval;

  const LiftedPlan lift = canonical_lift(spec, gamma, p);
  rep.lifted_objective = homogeneous_objective(spec, lift);

  rep.max_discrepancy =
      std::max({std::abs(rep.primal_value - rep.h_functional),
                std::abs(rep.primal_value - rep.lifted_objective),
                std::abs(rep.h_functional - rep.lifted_objective)});
  return rep;
}

}  // namespace woet
