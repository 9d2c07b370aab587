#include "woet/duality.hpp"

#include <algorithm>
#include <cmath>

#include "woet/detail/powell.hpp"
#include "woet/errors.hpp"

namespace woet {

using xreal::kInf;

namespace {

// Scale used for dual feasibility tolerances: 1e-9 * (1 + |c|_max), with the
// marton kinds scaled by the reachable theta range.
double cost_scale(const WeakCost& cost) {
  double cmax = 0.0;
  if (cost.has_matrix()) {
    for (double v : cost.c_matrix()) {
      if (std::isfinite(v)) cmax = std::max(cmax, std::abs(v));
    }
  } else {
    double spread = 1.0;
    if (cost.cols()->is_1d()) {
      spread = cost.cols()->spread_1d();
    }
    cmax = cost.theta() == MartonTheta::quadratic ? spread * spread : spread;
  }
  return 1e-9 * (1.0 + cmax);
}

void check_pair_shapes(const ProblemSpec& spec, const DualPair& pair) {
  if (pair.phi1.size() != spec.mu1.size() ||
      pair.phi2.size() != spec.mu2.size()) {
    throw ShapeMismatch("potential lengths must match the ground sets");
  }
}

}  // namespace

DualFeasibility feasibility_lambda(const ProblemSpec& spec,
                                   const DualPair& pair) {
  check_pair_shapes(spec, pair);
  std::vector<double> neg_phi2(pair.phi2.size());
  for (std::size_t j = 0; j < neg_phi2.size(); ++j) {
    neg_phi2[j] = -pair.phi2[j];
  }
  const std::vector<ExtendedReal> rc = rc_transform(spec.cost, neg_phi2);
  DualFeasibility out;
  out.max_violation = -kInf;
  for (std::size_t i = 0; i < pair.phi1.size(); ++i) {
    const double viol = (rc[i] == kInf) ? -kInf : pair.phi1[i] - rc[i];
    out.max_violation = std::max(out.max_violation, viol);
  }
  if (out.max_violation == -kInf) out.max_violation = 0.0;
  out.feasible = out.max_violation <= cost_scale(spec.cost);
  return out;
}

double dual_value_lambda(const ProblemSpec& spec, const DualPair& pair) {
  const DualFeasibility feas = feasibility_lambda(spec, pair);
  if (!feas.feasible) {
    throw InfeasiblePair("lambda constraint violated by " +
                         std::to_string(feas.max_violation));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < spec.mu1.size(); ++i) {
    total += xreal::mass_mul(spec.mu1.weight(i), spec.f1.fcirc(pair.phi1[i]));
  }
  for (std::size_t j = 0; j < spec.mu2.size(); ++j) {
    total += xreal::mass_mul(spec.mu2.weight(j), spec.f2.fcirc(pair.phi2[j]));
  }
  return total;
}

DualPair lift_lambda_r(const ProblemSpec& spec, const DualPair& pair) {
  check_pair_shapes(spec, pair);
  DualPair lifted;
  lifted.form = DualForm::lambda;
  lifted.phi1.resize(pair.phi1.size());
  lifted.phi2.resize(pair.phi2.size());
  for (std::size_t i = 0; i < pair.phi1.size(); ++i) {
    lifted.phi1[i] = spec.f1.rstar(pair.phi1[i]);
  }
  for (std::size_t j = 0; j < pair.phi2.size(); ++j) {
    lifted.phi2[j] = spec.f2.rstar(pair.phi2[j]);
  }
  return lifted;
}

double dual_value_lambda_r(const ProblemSpec& spec, const DualPair& pair) {
  check_pair_shapes(spec, pair);
  for (double v : pair.phi1) {
    if (!(v < spec.f1.value_at_zero())) {
      throw InfeasiblePair("lambda_r requires sup phi1 < F1(0)");
    }
  }
  for (double v : pair.phi2) {
    if (!(v < spec.f2.value_at_zero())) {
      throw InfeasiblePair("lambda_r requires sup phi2 < F2(0)");
    }
  }
  const DualPair lifted = lift_lambda_r(spec, pair);
  const DualFeasibility feas = feasibility_lambda(spec, lifted);
  if (!feas.feasible) {
    throw InfeasiblePair("lambda_r constraint violated by " +
                         std::to_string(feas.max_violation));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < spec.mu1.size(); ++i) {
    total += spec.mu1.weight(i) * pair.phi1[i];
  }
  for (std::size_t j = 0; j < spec.mu2.size(); ++j) {
    total += spec.mu2.weight(j) * pair.phi2[j];
  }
  return total;
}

double dual_value_rc(const ProblemSpec& spec, std::span<const double> phi) {
  if (phi.size() != spec.mu2.size()) {
    throw ShapeMismatch("phi length must match the second ground set");
  }
  const std::vector<ExtendedReal> rc = rc_transform(spec.cost, phi);
  double total = 0.0;
  for (std::size_t i = 0; i < spec.mu1.size(); ++i) {
    total += xreal::mass_mul(spec.mu1.weight(i), spec.f1.fcirc_ext(rc[i]));
  }
  for (std::size_t j = 0; j < spec.mu2.size(); ++j) {
    total += xreal::mass_mul(spec.mu2.weight(j), spec.f2.fcirc(-phi[j]));
  }
  return total;
}

DualAscentResult dual_ascent_rc(const ProblemSpec& spec,
                                std::span<const double> seed_col_duals) {
  DualAscentResult res;
  res.hypotheses_met = spec.f1.recession() == kInf &&
                       spec.f2.recession() == kInf;
  const FeasibilityReport feas = check_feasibility(spec);
  if (feas.provably_infeasible) {
    res.primal_infeasible = true;
    res.bound = -kInf;
    return res;
  }

  const std::size_t n2 = spec.mu2.size();
  auto g = [&](const std::vector<double>& phi) {
    return dual_value_rc(spec, phi);
  };

  std::vector<std::vector<double>> starts;
  starts.emplace_back(n2, 0.0);
  if (seed_col_duals.size() == n2) {
    std::vector<double> s(n2);
    for (std::size_t j = 0; j < n2; ++j) s[j] = -seed_col_duals[j];
    starts.push_back(std::move(s));
  } else if (!seed_col_duals.empty()) {
    // seed covers the trimmed columns only; spread it over the support
    std::vector<double> s(n2, 0.0);
    std::size_t k = 0;
    double hi = 0.0;
    for (std::size_t j = 0; j < n2 && k < seed_col_duals.size(); ++j) {
      if (spec.mu2.weight(j) > kZeroMass) {
        s[j] = -seed_col_duals[k++];
        hi = std::max(hi, std::abs(s[j]));
      }
    }
    for (std::size_t j = 0; j < n2; ++j) {
      if (spec.mu2.weight(j) <= kZeroMass) s[j] = hi + 1.0;
    }
    starts.push_back(std::move(s));
  }

  res.bound = -kInf;
  detail::PowellOptions popts;
  popts.max_sweeps = 120;
  popts.initial_step = 0.25 * (1.0 + std::abs(spec.cost.lower_bound()));
  for (auto& start : starts) {
    std::vector<double> phi = start;
    const detail::PowellResult pr = detail::powell_maximize(g, &phi, popts);
    res.hit_iter_limit = res.hit_iter_limit || !pr.converged;
    if (pr.value > res.bound) {
      res.bound = pr.value;
      res.phi = phi;
    }
  }
  return res;
}

double duality_gap(const ProblemSpec& spec, const SolveReport& report,
                   std::span<const DualPair> extra_pairs) {
  double best = -kInf;
  const DualAscentResult ascent = dual_ascent_rc(spec);
  best = std::max(best, ascent.bound);
  for (const DualPair& pair : extra_pairs) {
    switch (pair.form) {
      case DualForm::lambda:
        best = std::max(best, dual_value_lambda(spec, pair));
        break;
      case DualForm::lambda_r:
        best = std::max(best, dual_value_lambda_r(spec, pair));
        break;
      case DualForm::rc:
        best = std::max(best, dual_value_rc(spec, pair.phi2));
        break;
    }
  }
  return report.primal_value - best;
}

}  // namespace woet
