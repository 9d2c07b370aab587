#include "woet/detail/powell.hpp"

#include <algorithm>
#include <cmath>

namespace woet::detail {

namespace {

constexpr double kGolden = 0.6180339887498949;

// Maximise t -> f(x + t d) for a concave slice. Brackets by doubling, then
// golden-section. Returns the gain and updates x in place.
double line_maximize(const std::function<double(const std::vector<double>&)>& f,
                     std::vector<double>* x, const std::vector<double>& d,
                     double step, double* fx) {
  const std::size_t n = x->size();
  std::vector<double> probe(n);
  auto eval = [&](double t) {
    for (std::size_t k = 0; k < n; ++k) probe[k] = (*x)[k] + t * d[k];
    return f(probe);
  };

  double t0 = 0.0, f0 = *fx;
  double h = step;
  double fp = eval(h), fm = eval(-h);
  double lo, hi;
  if (fp <= f0 && fm <= f0) {
    lo = -h;
    hi = h;
  } else {
    double dir = (fp > fm) ? 1.0 : -1.0;
    double fbest = std::max(fp, fm);
    double t = dir * h;
    double t_prev = 0.0;
    for (int it = 0; it < 60; ++it) {
      const double t_next = t * 2.0;
      const double fn = eval(t_next);
      if (fn <= fbest) {
        t_prev = t0;
        t0 = t;
        f0 = fbest;
        lo = std::min(t_prev, t_next);
        hi = std::max(t_prev, t_next);
        goto refine;
      }
      t_prev = t;
      t = t_next;
      fbest = fn;
    }
    lo = std::min(0.0, t);
    hi = std::max(0.0, t);
    f0 = fbest;
    t0 = t;
  }
refine:
  double a = lo, b = hi;
  double c1 = b - kGolden * (b - a);
  double c2 = a + kGolden * (b - a);
  double f1 = eval(c1), f2 = eval(c2);
  for (int it = 0; it < 80 && (b - a) > 1e-13 * (1.0 + std::abs(a)); ++it) {
    if (f1 >= f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - kGolden * (b - a);
      f1 = eval(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + kGolden * (b - a);
      f2 = eval(c2);
    }
  }
  double t_best = (f1 >= f2) ? c1 : c2;
  double f_best = std::max(f1, f2);
  if (f0 > f_best) {
    t_best = t0;
    f_best = f0;
  }
  if (f_best <= *fx) return 0.0;
  for (std::size_t k = 0; k < n; ++k) (*x)[k] += t_best * d[k];
  const double gain = f_best - *fx;
  *fx = f_best;
  return gain;
}

}  // namespace

PowellResult powell_maximize(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double>* x, const PowellOptions& opts) {
  PowellResult res;
  const std::size_t n = x->size();
  if (n == 0) {
    res.value = f(*x);
    res.converged = true;
    return res;
  }
  std::vector<std::vector<double>> dirs(n, std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < n; ++k) dirs[k][k] = 1.0;

  double fx = f(*x);
  double step = opts.initial_step;
  for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    ++res.sweeps;
    const std::vector<double> x_start = *x;
    double biggest_gain = 0.0;
    std::size_t biggest_idx = 0;
    double total_gain = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double gain = line_maximize(f, x, dirs[k], step, &fx);
      total_gain += gain;
      if (gain > biggest_gain) {
        biggest_gain = gain;
        biggest_idx = k;
      }
    }
    // combined direction of travel this sweep
    std::vector<double> combined(n);
    double norm = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      combined[k] = (*x)[k] - x_start[k];
      norm += combined[k] * combined[k];
    }
    if (norm > 0.0) {
      const double gain = line_maximize(f, x, combined, 1.0, &fx);
      total_gain += gain;
      if (gain > 1e-14 * (1.0 + std::abs(fx))) {
        dirs[biggest_idx] = combined;
      }
    }
    // periodic reset keeps the direction set well conditioned
    if ((sweep + 1) % (2 * n + 2) == 0) {
      for (std::size_t k = 0; k < n; ++k) {
        dirs[k].assign(n, 0.0);
        dirs[k][k] = 1.0;
      }
      step = std::max(step * 0.5, 1e-6);
    }
    if (total_gain <= opts.ftol * (1.0 + std::abs(fx))) {
      res.converged = true;
      break;
    }
  }
  res.value = fx;
  return res;
}

}  // namespace woet::detail
