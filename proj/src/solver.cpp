#include "woet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "solver_internal.hpp"
#include "woet/detail/simplex.hpp"
#include "woet/duality.hpp"
#include "woet/errors.hpp"

namespace woet {

using xreal::kInf;

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::iter_limit: return "iter_limit";
  }
  return "?";
}

ProblemSpec::ProblemSpec(DiscreteMeasure mu1_in, DiscreteMeasure mu2_in,
                         EntropyFunction f1_in, EntropyFunction f2_in,
                         WeakCost cost_in, SolverOptions options_in)
    : mu1(std::move(mu1_in)),
      mu2(std::move(mu2_in)),
      f1(f1_in),
      f2(f2_in),
      cost(std::move(cost_in)),
      options(options_in) {
  if (mu1.ground() != cost.rows() || mu2.ground() != cost.cols()) {
    throw GroundMismatch("measures must live on the cost's ground sets");
  }
  if (!(options.tol_gap > 0.0)) {
    throw ValidationError("tol_gap must be positive");
  }
  if (options.max_iter < 1) {
    throw ValidationError("max_iter must be at least 1");
  }
}

double ProblemSpec::resolved_mass_cap() const {
  if (options.mass_cap > 0.0) return options.mass_cap;
  return 4.0 * std::max(mu1.total_mass(), mu2.total_mass()) + 1.0;
}

ExtendedReal objective(const ProblemSpec& spec, const Coupling& gamma) {
  if (gamma.rows() != spec.mu1.ground() || gamma.cols() != spec.mu2.ground()) {
    throw ShapeMismatch("coupling grounds must match the problem grounds");
  }
  auto [g1, g2] = marginals(gamma);
  const ExtendedReal d1 = divergence(spec.f1, g1, spec.mu1);
  if (d1 == kInf) return kInf;
  const ExtendedReal d2 = divergence(spec.f2, g2, spec.mu2);
  if (d2 == kInf) return kInf;
  double total = d1 + d2;
  std::vector<double> row(gamma.n_cols());
  for (std::size_t i = 0; i < gamma.n_rows(); ++i) {
    for (std::size_t j = 0; j < gamma.n_cols(); ++j) row[j] = gamma(i, j);
    const ExtendedReal w = spec.cost.row_perspective(i, row);
    if (w == kInf) return kInf;
    total += w;
  }
  return total;
}

FeasibilityReport check_feasibility(const ProblemSpec& spec) {
  FeasibilityReport rep;
  const double m1 = spec.mu1.total_mass();
  const double m2 = spec.mu2.total_mass();

  double lo1, hi1, lo2, hi2;
  spec.f1.domain(&lo1, &hi1);
  spec.f2.domain(&lo2, &hi2);
  // m * D(F): the zero-mass measure collapses the scaled domain to {0}.
  const double a1 = m1 * lo1, b1 = (m1 == 0.0) ? 0.0 : m1 * hi1;
  const double a2 = m2 * lo2, b2 = (m2 == 0.0) ? 0.0 : m2 * hi2;
  rep.k_lo = std::max(a1, a2);
  rep.k_hi = std::min(b1, b2);
  rep.k_nonempty = rep.k_lo <= rep.k_hi + 1e-12 * (1.0 + std::abs(rep.k_hi));
  rep.provably_infeasible = !rep.k_nonempty;

  rep.f0_finite = xreal::is_finite(spec.f1.value_at_zero()) &&
                  xreal::is_finite(spec.f2.value_at_zero());
  // Linear and marton costs admit a separable bound on finite grounds as
  // soon as every entry is finite; the martingale cost takes +inf.
  rep.separable_bound = spec.cost.kind() != CostKind::martingale;
  if (rep.separable_bound && spec.cost.has_matrix()) {
    for (double v : spec.cost.c_matrix()) {
      if (!std::isfinite(v)) rep.separable_bound = false;
    }
  }
  rep.cond_ii =
      rep.k_nonempty && m1 > 0.0 && m2 > 0.0 && rep.separable_bound;
  rep.feasible_sufficient = rep.f0_finite || rep.cond_ii;
  if (!rep.k_nonempty) {
    rep.note = "K empty";
  } else if (!rep.feasible_sufficient &&
             spec.cost.kind() == CostKind::martingale) {
    rep.note = "martingale cost: separable bound not guaranteed";
  }
  return rep;
}

CoercivityReport check_coercivity(const ProblemSpec& spec) {
  CoercivityReport rep;
  rep.superlinear = spec.f1.recession() == kInf && spec.f2.recession() == kInf;
  // Finite point clouds are compact; the catalog keeps inf C > -inf.
  rep.compact = spec.f1.recession() + spec.f2.recession() +
                    spec.cost.lower_bound() >
                0.0;
  rep.ok = rep.superlinear || rep.compact;
  return rep;
}

namespace detail {

Trim make_trim(const ProblemSpec& spec) {
  Trim t;
  for (std::size_t i = 0; i < spec.mu1.size(); ++i) {
    if (spec.mu1.weight(i) > kZeroMass) t.rows.push_back(i);
  }
  for (std::size_t j = 0; j < spec.mu2.size(); ++j) {
    if (spec.mu2.weight(j) > kZeroMass) t.cols.push_back(j);
  }
  t.nr = t.rows.size();
  t.nc = t.cols.size();
  t.pinned.assign(t.nr * t.nc, false);
  if (spec.cost.has_matrix()) {
    for (std::size_t r = 0; r < t.nr; ++r) {
      for (std::size_t c = 0; c < t.nc; ++c) {
        if (spec.cost.c(t.rows[r], t.cols[c]) == kInf) {
          t.pinned[t.cell(r, c)] = true;
        }
      }
    }
  }
  return t;
}

Coupling expand_cells(const ProblemSpec& spec, const Trim& trim,
                      std::span<const double> cells) {
  const std::size_t n1 = spec.mu1.size();
  const std::size_t n2 = spec.mu2.size();
  std::vector<double> full(n1 * n2, 0.0);
  for (std::size_t r = 0; r < trim.nr; ++r) {
    for (std::size_t c = 0; c < trim.nc; ++c) {
      full[trim.rows[r] * n2 + trim.cols[c]] =
          std::max(0.0, cells[trim.cell(r, c)]);
    }
  }
  return Coupling(spec.mu1.ground(), spec.mu2.ground(), std::move(full));
}

ExtendedReal objective_on_cells(const ProblemSpec& spec, const Trim& trim,
                                std::span<const double> cells) {
  double total = 0.0;
  std::vector<double> colsum(trim.nc, 0.0);
  std::vector<double> row(trim.nc, 0.0);
  // row divergence + weak cost, row by row
  for (std::size_t r = 0; r < trim.nr; ++r) {
    double rs = 0.0;
    for (std::size_t c = 0; c < trim.nc; ++c) {
      const double v = std::max(0.0, cells[trim.cell(r, c)]);
      row[c] = v;
      rs += v;
      colsum[c] += v;
    }
    const double mu = spec.mu1.weight(trim.rows[r]);
    const ExtendedReal f = spec.f1.value(rs / mu);
    if (f == kInf) return kInf;
    total += mu * f;

    const std::size_t full_row = trim.rows[r];
    double w;
    // weak-cost row term on the active columns
    switch (spec.cost.kind()) {
      case CostKind::linear:
      case CostKind::martingale: {
        if (spec.cost.kind() == CostKind::martingale && rs > 0.0) {
          double dev = 0.0;
          for (std::size_t c = 0; c < trim.nc; ++c) {
            dev += row[c] * (spec.cost.cols()->coord(trim.cols[c]) -
                             spec.cost.rows()->coord(full_row));
          }
          if (std::abs(dev / rs) > spec.cost.mean_tol()) return kInf;
        }
        w = 0.0;
        for (std::size_t c = 0; c < trim.nc; ++c) {
          const double term =
              xreal::mass_mul(row[c], spec.cost.c(full_row, trim.cols[c]));
          if (term == kInf) return kInf;
          w += term;
        }
        break;
      }
      case CostKind::marton: {
        if (rs <= 0.0) {
          w = 0.0;
          break;
        }
        const std::size_t d = spec.cost.rows()->dimension();
        double acc = 0.0;
        std::vector<double> z(d);
        for (std::size_t k = 0; k < d; ++k) {
          double mean = 0.0;
          for (std::size_t c = 0; c < trim.nc; ++c) {
            mean += row[c] * spec.cost.cols()->point(trim.cols[c])[k];
          }
          z[k] = spec.cost.rows()->point(full_row)[k] - mean / rs;
        }
        acc = spec.cost.theta_value(z);
        w = rs * acc;
        break;
      }
      default:
        w = kInf;
    }
    if (w == kInf) return kInf;
    total += w;
  }
  // untouched reference mass on trimmed rows
  for (std::size_t i = 0; i < spec.mu1.size(); ++i) {
    if (spec.mu1.weight(i) <= kZeroMass) {
      const ExtendedReal f0 = spec.f1.value_at_zero();
      total += xreal::mass_mul(spec.mu1.weight(i), f0);
    }
  }
  // column divergence
  for (std::size_t c = 0; c < trim.nc; ++c) {
    const double mu = spec.mu2.weight(trim.cols[c]);
    const ExtendedReal f = spec.f2.value(colsum[c] / mu);
    if (f == kInf) return kInf;
    total += mu * f;
  }
  for (std::size_t j = 0; j < spec.mu2.size(); ++j) {
    if (spec.mu2.weight(j) <= kZeroMass) {
      total += xreal::mass_mul(spec.mu2.weight(j), spec.f2.value_at_zero());
    }
  }
  return total;
}

void marginal_band(const EntropyFunction& f, double mu, double* lo,
                   double* hi) {
  double dlo, dhi;
  f.domain(&dlo, &dhi);
  *lo = mu * dlo;
  *hi = (dhi == kInf) ? kInf : mu * dhi;
}

bool is_lp_instance(const ProblemSpec& spec) {
  auto indicator_like = [](const EntropyFunction& f) {
    return f.kind() == EntropyKind::indicator_one ||
           f.kind() == EntropyKind::range;
  };
  return indicator_like(spec.f1) && indicator_like(spec.f2) &&
         (spec.cost.kind() == CostKind::linear ||
          spec.cost.kind() == CostKind::martingale);
}

void project_martingale_row(std::span<const double> d, std::span<double> v) {
  bool has_pos = false, has_neg = false;
  for (double dk : d) {
    has_pos = has_pos || dk > 0.0;
    has_neg = has_neg || dk < 0.0;
  }
  for (double& vk : v) vk = std::max(0.0, vk);
  if (!has_pos || !has_neg) {
    // one-sided direction: feasibility forces zero off the kernel of d
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (d[k] != 0.0) v[k] = 0.0;
    }
    return;
  }
  auto g = [&](double lam) {
    double s = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) {
      s += std::max(0.0, v[k] - lam * d[k]) * d[k];
    }
    return s;
  };
  // g is nonincreasing with g(-inf) = +inf, g(+inf) = -inf
  double lo = -1.0, hi = 1.0;
  double scale = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    scale = std::max(scale, std::abs(v[k]));
  }
  lo = -(scale + 1.0) * 1e3;
  hi = (scale + 1.0) * 1e3;
  while (g(lo) < 0.0) lo *= 2.0;
  while (g(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double lam = 0.5 * (lo + hi);
  for (std::size_t k = 0; k < d.size(); ++k) {
    v[k] = std::max(0.0, v[k] - lam * d[k]);
  }
}

}  // namespace detail

namespace {

using detail::Trim;

// ----- linear-programming backend ------------------------------------------

struct LpLayout {
  detail::LinearProgram lp;
  std::size_t n_cells = 0;
  std::size_t row_constraints = 0;  // index base of column constraints
  bool has_row_band = false;
  bool has_col_band = false;
};

// Build min <c, gamma> over the trimmed cells subject to marginal bands and
// martingale equalities. `feasibility_only` drops the cost (phase-I use).
LpLayout build_lp(const ProblemSpec& spec, const Trim& trim,
                  bool feasibility_only) {
  LpLayout out;
  auto& lp = out.lp;
  out.n_cells = trim.nr * trim.nc;

  const bool row_band = spec.f1.kind() == EntropyKind::indicator_one ||
                        spec.f1.kind() == EntropyKind::range;
  const bool col_band = spec.f2.kind() == EntropyKind::indicator_one ||
                        spec.f2.kind() == EntropyKind::range;
  const bool mart = spec.cost.kind() == CostKind::martingale;
  out.has_row_band = row_band;
  out.has_col_band = col_band;

  const std::size_t n_rows_c = (row_band ? trim.nr : 0) +
                               (col_band ? trim.nc : 0) +
                               (mart ? trim.nr : 0);
  const std::size_t n_slack = (row_band ? trim.nr : 0) +
                              (col_band ? trim.nc : 0);
  lp.n_rows = n_rows_c;
  lp.n_cols = out.n_cells + n_slack;
  lp.a.assign(lp.n_rows * lp.n_cols, 0.0);
  lp.b.assign(lp.n_rows, 0.0);
  lp.c.assign(lp.n_cols, 0.0);
  lp.lo.assign(lp.n_cols, 0.0);
  lp.up.assign(lp.n_cols, kInf);

  const double cap = spec.resolved_mass_cap();
  for (std::size_t r = 0; r < trim.nr; ++r) {
    for (std::size_t c = 0; c < trim.nc; ++c) {
      const std::size_t j = trim.cell(r, c);
      lp.up[j] = trim.pinned[j] ? 0.0 : cap;
      if (!feasibility_only && !trim.pinned[j] && spec.cost.has_matrix()) {
        lp.c[j] = spec.cost.c(trim.rows[r], trim.cols[c]);
      }
    }
  }

  std::size_t row_idx = 0;
  std::size_t slack_idx = out.n_cells;
  if (row_band) {
    for (std::size_t r = 0; r < trim.nr; ++r, ++row_idx, ++slack_idx) {
      for (std::size_t c = 0; c < trim.nc; ++c) {
        lp.at(row_idx, trim.cell(r, c)) = 1.0;
      }
      lp.at(row_idx, slack_idx) = -1.0;
      double lo, hi;
      detail::marginal_band(spec.f1, spec.mu1.weight(trim.rows[r]), &lo, &hi);
      lp.lo[slack_idx] = lo;
      lp.up[slack_idx] = std::min(hi, cap * trim.nc);
    }
  }
  out.row_constraints = row_idx;
  if (col_band) {
    for (std::size_t c = 0; c < trim.nc; ++c, ++row_idx, ++slack_idx) {
      for (std::size_t r = 0; r < trim.nr; ++r) {
        lp.at(row_idx, trim.cell(r, c)) = 1.0;
      }
      lp.at(row_idx, slack_idx) = -1.0;
      double lo, hi;
      detail::marginal_band(spec.f2, spec.mu2.weight(trim.cols[c]), &lo, &hi);
      lp.lo[slack_idx] = lo;
      lp.up[slack_idx] = std::min(hi, cap * trim.nr);
    }
  }
  if (mart) {
    for (std::size_t r = 0; r < trim.nr; ++r, ++row_idx) {
      const double xi = spec.cost.rows()->coord(trim.rows[r]);
      for (std::size_t c = 0; c < trim.nc; ++c) {
        lp.at(row_idx, trim.cell(r, c)) =
            spec.cost.cols()->coord(trim.cols[c]) - xi;
      }
      lp.b[row_idx] = 0.0;
    }
  }
  return out;
}

// ----- smooth backend: projected gradient with momentum ---------------------

struct ConstraintSet {
  bool row_band = false;
  bool col_band = false;
  bool martingale = false;
  std::vector<double> row_lo, row_hi;
  std::vector<double> col_lo, col_hi;
  std::vector<std::vector<double>> mart_dir;  // per active row
  double cap = kInf;
};

ConstraintSet make_constraints(const ProblemSpec& spec, const Trim& trim) {
  ConstraintSet cs;
  cs.cap = spec.resolved_mass_cap();
  cs.row_band = spec.f1.kind() == EntropyKind::indicator_one ||
                spec.f1.kind() == EntropyKind::range;
  cs.col_band = spec.f2.kind() == EntropyKind::indicator_one ||
                spec.f2.kind() == EntropyKind::range;
  cs.martingale = spec.cost.kind() == CostKind::martingale;
  if (cs.row_band) {
    cs.row_lo.resize(trim.nr);
    cs.row_hi.resize(trim.nr);
    for (std::size_t r = 0; r < trim.nr; ++r) {
      detail::marginal_band(spec.f1, spec.mu1.weight(trim.rows[r]),
                            &cs.row_lo[r], &cs.row_hi[r]);
    }
  }
  if (cs.col_band) {
    cs.col_lo.resize(trim.nc);
    cs.col_hi.resize(trim.nc);
    for (std::size_t c = 0; c < trim.nc; ++c) {
      detail::marginal_band(spec.f2, spec.mu2.weight(trim.cols[c]),
                            &cs.col_lo[c], &cs.col_hi[c]);
    }
  }
  if (cs.martingale) {
    cs.mart_dir.resize(trim.nr);
    for (std::size_t r = 0; r < trim.nr; ++r) {
      cs.mart_dir[r].resize(trim.nc);
      const double xi = spec.cost.rows()->coord(trim.rows[r]);
      for (std::size_t c = 0; c < trim.nc; ++c) {
        cs.mart_dir[r][c] = spec.cost.cols()->coord(trim.cols[c]) - xi;
      }
    }
  }
  return cs;
}

void project_box(const Trim& trim, const ConstraintSet& cs,
                 std::vector<double>* x) {
  for (std::size_t k = 0; k < x->size(); ++k) {
    double v = std::clamp((*x)[k], 0.0, cs.cap);
    if (trim.pinned[k]) v = 0.0;
    (*x)[k] = v;
  }
}

void project_row_bands(const Trim& trim, const ConstraintSet& cs,
                       std::vector<double>* x) {
  for (std::size_t r = 0; r < trim.nr; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < trim.nc; ++c) s += (*x)[trim.cell(r, c)];
    const double t = std::clamp(s, cs.row_lo[r], cs.row_hi[r]);
    const double shift = (t - s) / static_cast<double>(trim.nc);
    for (std::size_t c = 0; c < trim.nc; ++c) (*x)[trim.cell(r, c)] += shift;
  }
}

void project_col_bands(const Trim& trim, const ConstraintSet& cs,
                       std::vector<double>* x) {
  for (std::size_t c = 0; c < trim.nc; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < trim.nr; ++r) s += (*x)[trim.cell(r, c)];
    const double t = std::clamp(s, cs.col_lo[c], cs.col_hi[c]);
    const double shift = (t - s) / static_cast<double>(trim.nr);
    for (std::size_t r = 0; r < trim.nr; ++r) (*x)[trim.cell(r, c)] += shift;
  }
}

void project_martingale_rows(const Trim& trim, const ConstraintSet& cs,
                             std::vector<double>* x) {
  for (std::size_t r = 0; r < trim.nr; ++r) {
    std::span<double> row(x->data() + r * trim.nc, trim.nc);
    detail::project_martingale_row(cs.mart_dir[r], row);
  }
}

// Dykstra's alternating projection onto the intersection of the active sets.
void project_feasible(const Trim& trim, const ConstraintSet& cs,
                      std::vector<double>* x) {
  std::vector<void (*)(const Trim&, const ConstraintSet&,
                       std::vector<double>*)>
      projs;
  projs.push_back(&project_box);
  if (cs.row_band) projs.push_back(&project_row_bands);
  if (cs.col_band) projs.push_back(&project_col_bands);
  if (cs.martingale) projs.push_back(&project_martingale_rows);
  if (projs.size() == 1) {
    project_box(trim, cs, x);
    return;
  }
  const std::size_t n = x->size();
  std::vector<std::vector<double>> corr(projs.size(),
                                        std::vector<double>(n, 0.0));
  std::vector<double> prev(n);
  double scale = 1.0;
  for (double v : *x) scale = std::max(scale, std::abs(v));
  for (int cycle = 0; cycle < 400; ++cycle) {
    double shift = 0.0;
    for (std::size_t s = 0; s < projs.size(); ++s) {
      for (std::size_t k = 0; k < n; ++k) {
        prev[k] = (*x)[k] + corr[s][k];
        (*x)[k] = prev[k];
      }
      projs[s](trim, cs, x);
      for (std::size_t k = 0; k < n; ++k) {
        const double nc = prev[k] - (*x)[k];
        shift += std::abs(nc - corr[s][k]);
        corr[s][k] = nc;
      }
    }
    if (shift < 1e-13 * scale) break;
  }
  project_box(trim, cs, x);
}

// Smooth parts of the objective (entropy divergences outside the constraint
// set plus the cost term); marton-absolute uses an eps-smoothed |.|.
struct SmoothObjective {
  const ProblemSpec& spec;
  const Trim& trim;
  double eps = 0.0;  // smoothing width for the absolute marton kernel

  bool f1_smooth() const {
    return spec.f1.kind() == EntropyKind::kl ||
           spec.f1.kind() == EntropyKind::chi_squared;
  }
  bool f2_smooth() const {
    return spec.f2.kind() == EntropyKind::kl ||
           spec.f2.kind() == EntropyKind::chi_squared;
  }

  static double entropy_term(const EntropyFunction& f, double r, double mu) {
    return mu * f.value(std::max(0.0, r) / mu);
  }
  static double entropy_grad(const EntropyFunction& f, double r, double mu) {
    const double s = std::max(r, 1e-300) / mu;
    switch (f.kind()) {
      case EntropyKind::kl: return std::log(s);
      case EntropyKind::chi_squared: return 2.0 * (s - 1.0);
      default: return 0.0;
    }
  }

  double theta_smooth(double z) const {
    if (spec.cost.theta() == MartonTheta::quadratic) return z * z;
    return std::sqrt(z * z + eps * eps) - eps;
  }
  double theta_smooth_grad(double z) const {
    if (spec.cost.theta() == MartonTheta::quadratic) return 2.0 * z;
    return z / std::sqrt(z * z + eps * eps);
  }

  double value(const std::vector<double>& x) const {
    double total = 0.0;
    std::vector<double> colsum(trim.nc, 0.0);
    for (std::size_t r = 0; r < trim.nr; ++r) {
      double rs = 0.0;
      for (std::size_t c = 0; c < trim.nc; ++c) {
        rs += x[trim.cell(r, c)];
        colsum[c] += x[trim.cell(r, c)];
      }
      if (f1_smooth()) {
        total += entropy_term(spec.f1, rs, spec.mu1.weight(trim.rows[r]));
      }
      total += cost_row_value(x, r, rs);
    }
    if (f2_smooth()) {
      for (std::size_t c = 0; c < trim.nc; ++c) {
        total +=
            entropy_term(spec.f2, colsum[c], spec.mu2.weight(trim.cols[c]));
      }
    }
    return total;
  }

  double cost_row_value(const std::vector<double>& x, std::size_t r,
                        double rs) const {
    const std::size_t full_row = trim.rows[r];
    switch (spec.cost.kind()) {
      case CostKind::linear:
      case CostKind::martingale: {
        double w = 0.0;
        for (std::size_t c = 0; c < trim.nc; ++c) {
          if (trim.pinned[trim.cell(r, c)]) continue;
          w += x[trim.cell(r, c)] * spec.cost.c(full_row, trim.cols[c]);
        }
        return w;
      }
      case CostKind::marton: {
        if (rs <= 1e-300) return 0.0;
        const std::size_t d = spec.cost.rows()->dimension();
        double acc = 0.0;
        if (spec.cost.theta() == MartonTheta::quadratic) {
          for (std::size_t k = 0; k < d; ++k) {
            double mean = 0.0;
            for (std::size_t c = 0; c < trim.nc; ++c) {
              mean += x[trim.cell(r, c)] * spec.cost.cols()->point(
                                               trim.cols[c])[k];
            }
            const double z = spec.cost.rows()->point(full_row)[k] - mean / rs;
            acc += z * z;
          }
          return rs * acc;
        }
        double mean = 0.0;
        for (std::size_t c = 0; c < trim.nc; ++c) {
          mean += x[trim.cell(r, c)] * spec.cost.cols()->coord(trim.cols[c]);
        }
        const double z = spec.cost.rows()->coord(full_row) - mean / rs;
        return rs * theta_smooth(z);
      }
    }
    return 0.0;
  }

  void gradient(const std::vector<double>& x, std::vector<double>* g) const {
    g->assign(x.size(), 0.0);
    std::vector<double> colsum(trim.nc, 0.0);
    std::vector<double> rowsum(trim.nr, 0.0);
    for (std::size_t r = 0; r < trim.nr; ++r) {
      for (std::size_t c = 0; c < trim.nc; ++c) {
        rowsum[r] += x[trim.cell(r, c)];
        colsum[c] += x[trim.cell(r, c)];
      }
    }
    for (std::size_t r = 0; r < trim.nr; ++r) {
      double row_g = 0.0;
      if (f1_smooth()) {
        row_g = entropy_grad(spec.f1, rowsum[r], spec.mu1.weight(trim.rows[r]));
      }
      for (std::size_t c = 0; c < trim.nc; ++c) {
        (*g)[trim.cell(r, c)] += row_g;
      }
      cost_row_gradient(x, r, rowsum[r], g);
    }
    if (f2_smooth()) {
      for (std::size_t c = 0; c < trim.nc; ++c) {
        const double gc =
            entropy_grad(spec.f2, colsum[c], spec.mu2.weight(trim.cols[c]));
        for (std::size_t r = 0; r < trim.nr; ++r) {
          (*g)[trim.cell(r, c)] += gc;
        }
      }
    }
  }

  void cost_row_gradient(const std::vector<double>& x, std::size_t r,
                         double rs, std::vector<double>* g) const {
    const std::size_t full_row = trim.rows[r];
    switch (spec.cost.kind()) {
      case CostKind::linear:
      case CostKind::martingale: {
        for (std::size_t c = 0; c < trim.nc; ++c) {
          if (trim.pinned[trim.cell(r, c)]) continue;
          (*g)[trim.cell(r, c)] += spec.cost.c(full_row, trim.cols[c]);
        }
        return;
      }
      case CostKind::marton: {
        const std::size_t d = spec.cost.rows()->dimension();
        std::vector<double> z(d, 0.0), mean(d, 0.0);
        if (rs > 1e-300) {
          for (std::size_t k = 0; k < d; ++k) {
            for (std::size_t c = 0; c < trim.nc; ++c) {
              mean[k] +=
                  x[trim.cell(r, c)] * spec.cost.cols()->point(trim.cols[c])[k];
            }
            mean[k] /= rs;
            z[k] = spec.cost.rows()->point(full_row)[k] - mean[k];
          }
          if (spec.cost.theta() == MartonTheta::quadratic) {
            double th = 0.0;
            for (std::size_t k = 0; k < d; ++k) th += z[k] * z[k];
            for (std::size_t c = 0; c < trim.nc; ++c) {
              double dot = 0.0;
              for (std::size_t k = 0; k < d; ++k) {
                dot += 2.0 * z[k] *
                       (mean[k] - spec.cost.cols()->point(trim.cols[c])[k]);
              }
              (*g)[trim.cell(r, c)] += th + dot;
            }
          } else {
            const double th = theta_smooth(z[0]);
            const double tg = theta_smooth_grad(z[0]);
            for (std::size_t c = 0; c < trim.nc; ++c) {
              (*g)[trim.cell(r, c)] +=
                  th + tg * (mean[0] - spec.cost.cols()->coord(trim.cols[c]));
            }
          }
        } else {
          // limit of the perspective along a single-column ray
          for (std::size_t c = 0; c < trim.nc; ++c) {
            const std::size_t dd = spec.cost.rows()->dimension();
            double acc = 0.0;
            if (spec.cost.theta() == MartonTheta::quadratic) {
              for (std::size_t k = 0; k < dd; ++k) {
                const double zz = spec.cost.rows()->point(full_row)[k] -
                                  spec.cost.cols()->point(trim.cols[c])[k];
                acc += zz * zz;
              }
            } else {
              acc = theta_smooth(spec.cost.rows()->coord(full_row) -
                                 spec.cost.cols()->coord(trim.cols[c]));
            }
            (*g)[trim.cell(r, c)] += acc;
          }
        }
        return;
      }
    }
  }
};

struct PgdResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  bool converged = false;
};

// Monotone accelerated projected gradient with backtracking.
PgdResult run_pgd(const SmoothObjective& obj, const Trim& trim,
                  const ConstraintSet& cs, std::vector<double> x0,
                  std::size_t max_iter) {
  PgdResult res;
  const std::size_t n = x0.size();
  project_feasible(trim, cs, &x0);
  std::vector<double> x = x0, y = x0, x_prev = x0;
  std::vector<double> g(n), cand(n);
  double fx = obj.value(x);
  double L = 1.0;
  double t_mom = 1.0;
  std::size_t flat = 0;

  for (std::size_t it = 0; it < max_iter; ++it) {
    ++res.iterations;
    obj.gradient(y, &g);
    double fy = obj.value(y);
    bool accepted = false;
    double fc = fx;
    for (int bt = 0; bt < 60 && !accepted; ++bt) {
      for (std::size_t k = 0; k < n; ++k) cand[k] = y[k] - g[k] / L;
      project_feasible(trim, cs, &cand);
      fc = obj.value(cand);
      double q = fy;
      double diff2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double dk = cand[k] - y[k];
        q += g[k] * dk;
        diff2 += dk * dk;
      }
      q += 0.5 * L * diff2;
      if (fc <= q + 1e-14 * (1.0 + std::abs(q))) {
        accepted = true;
      } else {
        L *= 2.0;
      }
    }
    if (!accepted) break;

    // monotone safeguard: never move above the incumbent
    if (fc > fx) {
      // restart momentum from the incumbent
      y = x;
      t_mom = 1.0;
      obj.gradient(y, &g);
      for (std::size_t k = 0; k < n; ++k) cand[k] = y[k] - g[k] / L;
      project_feasible(trim, cs, &cand);
      fc = obj.value(cand);
      if (fc > fx) {
        L *= 2.0;
        if (L > 1e18) break;
        continue;
      }
    }

    x_prev = x;
    x = cand;
    const double improve = fx - fc;
    fx = fc;

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
    const double beta = (t_mom - 1.0) / t_next;
    for (std::size_t k = 0; k < n; ++k) {
      y[k] = x[k] + beta * (x[k] - x_prev[k]);
    }
    t_mom = t_next;
    L = std::max(L * 0.9, 1e-12);

    if (improve <= 1e-14 * (1.0 + std::abs(fx))) {
      if (++flat > 30) {
        res.converged = true;
        break;
      }
    } else {
      flat = 0;
    }
  }
  res.x = std::move(x);
  return res;
}

std::vector<double> initial_cells(const ProblemSpec& spec, const Trim& trim,
                                  const FeasibilityReport& feas) {
  std::vector<double> x(trim.nr * trim.nc, 0.0);
  const bool f0_finite = feas.f0_finite;
  if (f0_finite) return x;  // null coupling
  // scaled product coupling theta/(m1 m2) mu1 (x) mu2 with theta in K
  const double m1 = spec.mu1.total_mass();
  const double m2 = spec.mu2.total_mass();
  double theta = std::clamp(0.5 * (feas.k_lo + feas.k_hi), feas.k_lo,
                            feas.k_hi);
  if (!std::isfinite(theta)) theta = feas.k_lo + 1.0;
  if (m1 <= 0.0 || m2 <= 0.0) return x;
  for (std::size_t r = 0; r < trim.nr; ++r) {
    for (std::size_t c = 0; c < trim.nc; ++c) {
      x[trim.cell(r, c)] = theta / (m1 * m2) *
                           spec.mu1.weight(trim.rows[r]) *
                           spec.mu2.weight(trim.cols[c]);
    }
  }
  return x;
}

double martingale_residual_ratio(const ProblemSpec& spec,
                                 const Coupling& gamma) {
  if (spec.cost.kind() != CostKind::martingale) return 0.0;
  const double spread = std::max(spec.cost.cols()->spread_1d(), 1e-30);
  double worst = 0.0;
  for (std::size_t i = 0; i < gamma.n_rows(); ++i) {
    const double m = gamma.row_mass(i);
    if (m <= kZeroMass) continue;
    double dev = 0.0;
    for (std::size_t j = 0; j < gamma.n_cols(); ++j) {
      dev += gamma(i, j) *
             (spec.cost.cols()->coord(j) - spec.cost.rows()->coord(i));
    }
    worst = std::max(worst, std::abs(dev) / (spread * m));
  }
  return worst;
}

}  // namespace

SolveReport solve(const ProblemSpec& spec) {
  SolveDiagnostics diag;
  diag.feasibility = check_feasibility(spec);
  diag.coercivity = check_coercivity(spec);
  if (diag.feasibility.provably_infeasible) {
    throw InfeasibleProblem("necessary condition fails: K empty");
  }

  const Trim trim = detail::make_trim(spec);
  const bool lp_class = detail::is_lp_instance(spec);
  const bool has_bands = spec.f1.kind() == EntropyKind::indicator_one ||
                         spec.f1.kind() == EntropyKind::range ||
                         spec.f2.kind() == EntropyKind::indicator_one ||
                         spec.f2.kind() == EntropyKind::range;

  std::vector<double> cells(trim.nr * trim.nc, 0.0);
  std::size_t iterations = 0;
  std::vector<double> lp_col_duals;

  if (lp_class) {
    diag.method = "simplex";
    LpLayout layout = build_lp(spec, trim, /*feasibility_only=*/false);
    const detail::LpResult res = detail::solve_lp(layout.lp,
                                                  spec.options.max_iter);
    iterations = res.iterations;
    if (res.status == detail::LpStatus::infeasible) {
      throw InfeasibleProblem("constraint polytope is empty");
    }
    if (res.status == detail::LpStatus::unbounded) {
      throw InfeasibleProblem("objective unbounded below (no coercivity)");
    }
    for (std::size_t k = 0; k < layout.n_cells; ++k) cells[k] = res.x[k];
    if (layout.has_col_band && res.status == detail::LpStatus::optimal) {
      lp_col_duals.assign(res.dual.begin() + layout.row_constraints,
                          res.dual.begin() + layout.row_constraints + trim.nc);
    }
    if (res.status == detail::LpStatus::iter_limit) {
      diag.iterations = iterations;
      Coupling gamma = detail::expand_cells(spec, trim, cells);
      SolveReport rep{std::move(gamma), 0.0, std::nullopt, std::nullopt,
                      SolveStatus::iter_limit, diag};
      rep.primal_value = objective(spec, rep.coupling);
      return rep;
    }
  } else {
    diag.method = "pgd";
    // feasible start
    if (has_bands || spec.cost.kind() == CostKind::martingale) {
      LpLayout layout = build_lp(spec, trim, /*feasibility_only=*/true);
      const detail::LpResult res = detail::solve_lp(layout.lp,
                                                    spec.options.max_iter);
      if (res.status == detail::LpStatus::infeasible) {
        throw InfeasibleProblem("constraint polytope is empty");
      }
      if (res.status == detail::LpStatus::optimal) {
        for (std::size_t k = 0; k < trim.nr * trim.nc; ++k) {
          cells[k] = res.x[k];
        }
      }
    } else {
      cells = initial_cells(spec, trim, diag.feasibility);
    }

    const ConstraintSet cs = make_constraints(spec, trim);
    const bool smooth_abs = spec.cost.kind() == CostKind::marton &&
                            spec.cost.theta() == MartonTheta::absolute;
    const double spread = spec.cost.cols()->is_1d()
                              ? std::max(spec.cost.cols()->spread_1d(), 1e-9)
                              : 1.0;
    std::vector<double> eps_stages;
    if (smooth_abs) {
      for (double e = 1e-2 * spread; e > 1e-13 * spread; e *= 1e-2) {
        eps_stages.push_back(e);
      }
      eps_stages.push_back(0.0);
    } else {
      eps_stages.push_back(0.0);
    }
    const std::size_t budget =
        std::max<std::size_t>(spec.options.max_iter / eps_stages.size(), 200);
    for (double eps : eps_stages) {
      SmoothObjective obj{spec, trim, std::max(eps, 1e-300)};
      PgdResult pg = run_pgd(obj, trim, cs, cells, budget);
      cells = std::move(pg.x);
      iterations += pg.iterations;
    }
    // exact martingale feasibility on the final iterate
    if (spec.cost.kind() == CostKind::martingale) {
      const ConstraintSet cs2 = make_constraints(spec, trim);
      project_martingale_rows(trim, cs2, &cells);
    }
  }

  diag.iterations = iterations;
  Coupling gamma = detail::expand_cells(spec, trim, cells);
  diag.martingale_residual = martingale_residual_ratio(spec, gamma);

  SolveReport rep{std::move(gamma), 0.0, std::nullopt, std::nullopt,
                  SolveStatus::feasible, diag};
  rep.primal_value = objective(spec, rep.coupling);

  if (spec.options.certify) {
    DualAscentResult ascent = dual_ascent_rc(spec, lp_col_duals);
    if (ascent.bound > -kInf) {
      rep.dual_bound = ascent.bound;
      rep.dual_phi = std::move(ascent.phi);
      rep.gap = rep.primal_value - ascent.bound;
      const double tol =
          spec.options.tol_gap * (1.0 + std::abs(rep.primal_value));
      rep.status = (*rep.gap <= tol) ? SolveStatus::optimal
                                     : SolveStatus::feasible;
    }
  }
  if (iterations >= spec.options.max_iter &&
      rep.status != SolveStatus::optimal) {
    rep.status = SolveStatus::iter_limit;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// oracle

namespace {

// One enumeration coordinate of the oracle parameterisation.
struct OracleDof {
  double cap = 0.0;
};

struct OracleParam {
  // Maps DOF values to active-cell masses. Returns false when the candidate
  // is structurally invalid (negative implied entry).
  virtual bool assemble(std::span<const double> dof,
                        std::vector<double>* cells) const = 0;
  virtual ~OracleParam() = default;
  std::vector<OracleDof> dofs;
};

// Direct enumeration of every active cell.
struct FreeCellsParam : OracleParam {
  const Trim* trim;
  double cap;
  bool assemble(std::span<const double> dof,
                std::vector<double>* cells) const override {
    std::copy(dof.begin(), dof.end(), cells->begin());
    return true;
  }
};

// Both marginals pinned: enumerate the (nr-1) x (nc-1) block, complete the
// last row and column from the marginal sums.
struct PinnedBlockParam : OracleParam {
  const ProblemSpec* spec;
  const Trim* trim;
  bool assemble(std::span<const double> dof,
                std::vector<double>* cells) const override {
    const std::size_t nr = trim->nr, nc = trim->nc;
    std::fill(cells->begin(), cells->end(), 0.0);
    std::size_t k = 0;
    for (std::size_t r = 0; r + 1 < nr; ++r) {
      for (std::size_t c = 0; c + 1 < nc; ++c) {
        (*cells)[trim->cell(r, c)] = dof[k++];
      }
    }
    // complete last column then last row
    for (std::size_t r = 0; r + 1 < nr; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c + 1 < nc; ++c) s += (*cells)[trim->cell(r, c)];
      const double rest = spec->mu1.weight(trim->rows[r]) - s;
      if (rest < -1e-12) return false;
      (*cells)[trim->cell(r, nc - 1)] = std::max(0.0, rest);
    }
    for (std::size_t c = 0; c < nc; ++c) {
      double s = 0.0;
      for (std::size_t r = 0; r + 1 < nr; ++r) s += (*cells)[trim->cell(r, c)];
      const double rest = spec->mu2.weight(trim->cols[c]) - s;
      if (rest < -1e-12) return false;
      (*cells)[trim->cell(nr - 1, c)] = std::max(0.0, rest);
    }
    return true;
  }
};

// Martingale instances: enumerate conic weights over the extreme rays of
// each row's moment cone (point mass at x_i, or a two-point combination
// around it), which satisfies the mean constraints exactly.
struct MartingaleConeParam : OracleParam {
  const Trim* trim;
  struct Generator {
    std::size_t row;
    std::vector<std::pair<std::size_t, double>> cells;  // (active col, mass)
  };
  std::vector<Generator> gens;
  bool assemble(std::span<const double> dof,
                std::vector<double>* cells) const override {
    std::fill(cells->begin(), cells->end(), 0.0);
    for (std::size_t g = 0; g < gens.size(); ++g) {
      for (const auto& [c, mass] : gens[g].cells) {
        (*cells)[trim->cell(gens[g].row, c)] += dof[g] * mass;
      }
    }
    return true;
  }
};

}  // namespace

std::pair<double, Coupling> oracle_solve(const ProblemSpec& spec,
                                         double grid_step, double mass_max) {
  if (spec.mu1.size() * spec.mu2.size() > 9) {
    throw TooLarge("oracle_solve supports at most 9 cells");
  }
  if (!(grid_step > 0.0) || !(mass_max > 0.0)) {
    throw ValidationError("oracle_solve requires positive step and cap");
  }
  const Trim trim = detail::make_trim(spec);

  std::unique_ptr<OracleParam> param;
  if (spec.cost.kind() == CostKind::martingale) {
    auto p = std::make_unique<MartingaleConeParam>();
    p->trim = &trim;
    for (std::size_t r = 0; r < trim.nr; ++r) {
      const double xi = spec.cost.rows()->coord(trim.rows[r]);
      for (std::size_t c = 0; c < trim.nc; ++c) {
        if (spec.cost.cols()->coord(trim.cols[c]) == xi &&
            !trim.pinned[trim.cell(r, c)]) {
          MartingaleConeParam::Generator g;
          g.row = r;
          g.cells = {{c, 1.0}};
          p->gens.push_back(std::move(g));
          p->dofs.push_back({mass_max});
        }
      }
      for (std::size_t cl = 0; cl < trim.nc; ++cl) {
        const double xl = spec.cost.cols()->coord(trim.cols[cl]);
        if (!(xl < xi) || trim.pinned[trim.cell(r, cl)]) continue;
        for (std::size_t cr = 0; cr < trim.nc; ++cr) {
          const double xr = spec.cost.cols()->coord(trim.cols[cr]);
          if (!(xr > xi) || trim.pinned[trim.cell(r, cr)]) continue;
          MartingaleConeParam::Generator g;
          g.row = r;
          const double wl = xr - xi, wr = xi - xl;
          g.cells = {{cl, wl}, {cr, wr}};
          p->gens.push_back(std::move(g));
          p->dofs.push_back({mass_max / (wl + wr)});
        }
      }
    }
    param = std::move(p);
  } else if (spec.f1.kind() == EntropyKind::indicator_one &&
             spec.f2.kind() == EntropyKind::indicator_one && trim.nr >= 1 &&
             trim.nc >= 1) {
    auto p = std::make_unique<PinnedBlockParam>();
    p->spec = &spec;
    p->trim = &trim;
    for (std::size_t r = 0; r + 1 < trim.nr; ++r) {
      for (std::size_t c = 0; c + 1 < trim.nc; ++c) {
        p->dofs.push_back(
            {std::min(spec.mu1.weight(trim.rows[r]),
                      spec.mu2.weight(trim.cols[c]))});
      }
    }
    param = std::move(p);
  } else {
    auto p = std::make_unique<FreeCellsParam>();
    p->trim = &trim;
    p->cap = mass_max;
    for (std::size_t k = 0; k < trim.nr * trim.nc; ++k) {
      p->dofs.push_back({trim.pinned[k] ? 0.0 : mass_max});
    }
    param = std::move(p);
  }

  const std::size_t ndof = param->dofs.size();
  std::vector<double> best_dof(ndof, 0.0);
  std::vector<double> cells(trim.nr * trim.nc, 0.0);
  double best = kInf;
  {
    std::vector<double> zero(trim.nr * trim.nc, 0.0);
    if (param->assemble(best_dof, &zero)) {
      best = detail::objective_on_cells(spec, trim, zero);
    }
  }

  // level 0: full grid at grid_step; later levels: +-2 refined steps around
  // the incumbent
  double h = grid_step;
  std::vector<double> center = best_dof;
  for (int level = 0; level < 14; ++level) {
    std::vector<std::vector<double>> values(ndof);
    std::size_t combos = 1;
    for (std::size_t k = 0; k < ndof; ++k) {
      if (level == 0) {
        for (double v = 0.0; v <= param->dofs[k].cap + 1e-12; v += h) {
          values[k].push_back(v);
        }
      } else {
        for (int s = -2; s <= 2; ++s) {
          const double v = center[k] + s * h;
          if (v >= -1e-12 && v <= param->dofs[k].cap + 1e-12) {
            values[k].push_back(std::max(0.0, v));
          }
        }
      }
      if (values[k].empty()) values[k].push_back(0.0);
      combos *= values[k].size();
      if (combos > 80000000ULL) {
        throw TooLarge("oracle grid would need " + std::to_string(combos) +
                       " evaluations; increase grid_step");
      }
    }
    std::vector<std::size_t> idx(ndof, 0);
    std::vector<double> dof(ndof);
    bool done = ndof == 0;
    while (true) {
      for (std::size_t k = 0; k < ndof; ++k) dof[k] = values[k][idx[k]];
      if (param->assemble(dof, &cells)) {
        const double val = detail::objective_on_cells(spec, trim, cells);
        if (val < best) {
          best = val;
          best_dof = dof;
        }
      }
      if (done) break;
      std::size_t k = 0;
      while (k < ndof && ++idx[k] == values[k].size()) {
        idx[k] = 0;
        ++k;
      }
      if (k == ndof) break;
    }
    center = best_dof;
    h /= 2.5;
    if (h < 1e-7 * (1.0 + mass_max)) break;
    if (ndof == 0) break;
  }

  param->assemble(best_dof, &cells);
  return {best, detail::expand_cells(spec, trim, cells)};
}

MonotonicityReport c_monotonicity_check(const ProblemSpec& spec,
                                        const Coupling& gamma,
                                        std::size_t trials,
                                        std::uint64_t seed) {
  MonotonicityReport rep;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < gamma.n_rows(); ++i) {
    if (gamma.row_mass(i) > kZeroMass) rows.push_back(i);
  }
  if (rows.size() < 2) return rep;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, rows.size() - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t nc = gamma.n_cols();

  for (std::size_t t = 0; t < trials; ++t) {
    std::size_t i1 = rows[pick(rng)];
    std::size_t i2 = rows[pick(rng)];
    if (i1 == i2) {
      i2 = rows[(pick(rng) + 1) % rows.size()];
      if (i1 == i2) continue;
    }
    const std::vector<double> p1 = disintegrate(gamma, i1);
    const std::vector<double> p2 = disintegrate(gamma, i2);
    std::vector<double> s(nc);
    for (std::size_t j = 0; j < nc; ++j) s[j] = p1[j] + p2[j];

    // random split m1 + m2 = p1 + p2 with both probability vectors
    std::vector<double> m1(nc), m2(nc);
    bool ok = false;
    for (int attempt = 0; attempt < 64 && !ok; ++attempt) {
      double tot = 0.0;
      for (std::size_t j = 0; j < nc; ++j) {
        m1[j] = s[j] * unif(rng);
        tot += m1[j];
      }
      if (tot < 1.0) continue;
      for (std::size_t j = 0; j < nc; ++j) {
        m1[j] /= tot;
        m2[j] = s[j] - m1[j];
      }
      ok = true;
    }
    if (!ok) continue;
    ++rep.trials;

    const ExtendedReal before =
        spec.cost.value(i1, p1) + spec.cost.value(i2, p2);
    const ExtendedReal after =
        spec.cost.value(i1, m1) + spec.cost.value(i2, m2);
    const double improvement = before - after;
    if (improvement > 1e-7) {
      ++rep.violations;
      rep.worst_violation = std::max(rep.worst_violation, improvement);
    }
  }
  return rep;
}

}  // namespace woet
