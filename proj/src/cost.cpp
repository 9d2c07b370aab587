#include "woet/cost.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "woet/errors.hpp"

namespace woet {

using xreal::kInf;

ConvexEnvelope1D::ConvexEnvelope1D(std::vector<double> xs,
                                   std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {}

std::vector<double> ConvexEnvelope1D::slopes() const {
  std::vector<double> s;
  s.reserve(xs_.size() > 0 ? xs_.size() - 1 : 0);
  for (std::size_t k = 0; k + 1 < xs_.size(); ++k) {
    s.push_back((ys_[k + 1] - ys_[k]) / (xs_[k + 1] - xs_[k]));
  }
  return s;
}

ExtendedReal ConvexEnvelope1D::value_at(double x) const {
  if (x < xs_.front() || x > xs_.back()) return kInf;
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  if (it == xs_.begin()) return ys_.front();
  if (it == xs_.end()) return ys_.back();
  const std::size_t k = static_cast<std::size_t>(it - xs_.begin()) - 1;
  const double t = (x - xs_[k]) / (xs_[k + 1] - xs_[k]);
  return (1.0 - t) * ys_[k] + t * ys_[k + 1];
}

ConvexEnvelope1D convex_envelope_1d(std::span<const double> xs,
                                    std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ShapeMismatch("envelope inputs must have equal length");
  }
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    if (!(xs[i] < xs[i + 1])) {
      throw ValidationError("envelope abscissae must be strictly increasing");
    }
  }
  std::vector<double> fx, fy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (ys[i] < kInf) {
      fx.push_back(xs[i]);
      fy.push_back(ys[i]);
    }
  }
  if (fx.empty()) {
    throw EmptyFinitePart("envelope requires at least one finite value");
  }
  // Monotone-chain lower hull; keeps slopes strictly increasing.
  std::vector<double> hx, hy;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    while (hx.size() >= 2) {
      const std::size_t m = hx.size();
      const double cross =
          (hy[m - 1] - hy[m - 2]) * (fx[i] - hx[m - 2]) -
          (fy[i] - hy[m - 2]) * (hx[m - 1] - hx[m - 2]);
      if (cross >= 0.0) {
        hx.pop_back();
        hy.pop_back();
      } else {
        break;
      }
    }
    hx.push_back(fx[i]);
    hy.push_back(fy[i]);
  }
  return ConvexEnvelope1D(std::move(hx), std::move(hy));
}

WeakCost::WeakCost(CostKind kind, GroundPtr rows, GroundPtr cols,
                   std::vector<double> c_matrix, MartonTheta theta)
    : kind_(kind),
      rows_(std::move(rows)),
      cols_(std::move(cols)),
      c_(std::move(c_matrix)),
      theta_(theta) {
  if (!rows_ || !cols_) throw ValidationError("cost requires ground sets");
  n_cols_ = cols_->size();
  if (kind_ != CostKind::marton) {
    if (c_.size() != rows_->size() * n_cols_) {
      throw ShapeMismatch("cost matrix must be |X1| x |X2|");
    }
    double lo = kInf;
    for (double v : c_) {
      if (std::isnan(v) || v == -kInf) {
        throw ValidationError("cost entries must be > -inf");
      }
      lo = std::min(lo, v);
    }
    lower_bound_ = (lo == kInf) ? 0.0 : lo;
  } else {
    // catalog thetas are nonnegative
    lower_bound_ = 0.0;
  }
}

WeakCost WeakCost::linear(GroundPtr rows, GroundPtr cols,
                          std::vector<double> c_matrix) {
  return WeakCost(CostKind::linear, std::move(rows), std::move(cols),
                  std::move(c_matrix), MartonTheta::quadratic);
}

WeakCost WeakCost::martingale(GroundPtr x, std::vector<double> c_matrix) {
  if (!x->is_1d()) {
    throw ValidationError("martingale cost requires a 1-D ground set");
  }
  return WeakCost(CostKind::martingale, x, x, std::move(c_matrix),
                  MartonTheta::quadratic);
}

WeakCost WeakCost::marton(GroundPtr rows, GroundPtr cols, MartonTheta theta) {
  if (rows->dimension() != cols->dimension()) {
    throw ValidationError("marton cost requires equal ground dimensions");
  }
  if (theta == MartonTheta::absolute && rows->dimension() != 1) {
    throw ValidationError("absolute marton cost is 1-D only");
  }
  return WeakCost(CostKind::marton, std::move(rows), std::move(cols), {},
                  theta);
}

double WeakCost::mean_tol() const {
  return 1e-9 * std::max(1e-30, cols_->is_1d() ? cols_->spread_1d() : 1.0);
}

ExtendedReal WeakCost::theta_value(std::span<const double> z) const {
  if (theta_ == MartonTheta::quadratic) {
    double s = 0.0;
    for (double v : z) s += v * v;
    return s;
  }
  return std::abs(z[0]);
}

ExtendedReal WeakCost::value(std::size_t row, std::span<const double> p) const {
  if (p.size() != n_cols_) {
    throw ShapeMismatch("probability vector length must match columns");
  }
  double total = 0.0;
  for (double v : p) {
    if (v < -1e-12) throw NotAProbability("negative probability weight");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw NotAProbability("weights sum to " + std::to_string(total));
  }

  switch (kind_) {
    case CostKind::linear: {
      double s = 0.0;
      for (std::size_t j = 0; j < n_cols_; ++j) {
        const double term = xreal::mass_mul(std::max(p[j], 0.0), c(row, j));
        if (term == kInf) return kInf;
        s += term;
      }
      return s;
    }
    case CostKind::martingale: {
      double mean = 0.0;
      for (std::size_t j = 0; j < n_cols_; ++j) {
        mean += std::max(p[j], 0.0) * cols_->coord(j);
      }
      if (std::abs(mean - rows_->coord(row)) > mean_tol()) return kInf;
      double s = 0.0;
      for (std::size_t j = 0; j < n_cols_; ++j) {
        const double term = xreal::mass_mul(std::max(p[j], 0.0), c(row, j));
        if (term == kInf) return kInf;
        s += term;
      }
      return s;
    }
    case CostKind::marton: {
      const std::size_t d = rows_->dimension();
      std::vector<double> z(d, 0.0);
      for (std::size_t k = 0; k < d; ++k) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n_cols_; ++j) {
          mean += std::max(p[j], 0.0) * cols_->point(j)[k];
        }
        z[k] = rows_->point(row)[k] - mean;
      }
      return theta_value(z);
    }
  }
  return kInf;
}

ExtendedReal WeakCost::row_perspective(
    std::size_t row, std::span<const double> row_masses) const {
  if (row_masses.size() != n_cols_) {
    throw ShapeMismatch("row length must match columns");
  }
  double m = 0.0;
  for (double v : row_masses) m += std::max(v, 0.0);
  if (m <= 0.0) return 0.0;

  switch (kind_) {
    case CostKind::linear:
    case CostKind::martingale: {
      if (kind_ == CostKind::martingale) {
        double dev = 0.0;
        for (std::size_t j = 0; j < n_cols_; ++j) {
          dev += std::max(row_masses[j], 0.0) *
                 (cols_->coord(j) - rows_->coord(row));
        }
        if (std::abs(dev / m) > mean_tol()) return kInf;
      }
      double s = 0.0;
      for (std::size_t j = 0; j < n_cols_; ++j) {
        const double term =
            xreal::mass_mul(std::max(row_masses[j], 0.0), c(row, j));
        if (term == kInf) return kInf;
        s += term;
      }
      return s;
    }
    case CostKind::marton: {
      const std::size_t d = rows_->dimension();
      std::vector<double> z(d, 0.0);
      for (std::size_t k = 0; k < d; ++k) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n_cols_; ++j) {
          mean += std::max(row_masses[j], 0.0) * cols_->point(j)[k];
        }
        z[k] = rows_->point(row)[k] - mean / m;
      }
      return m * theta_value(z);
    }
  }
  return kInf;
}

namespace {

// min over z in the envelope's support of env(z) + theta(x - z).
double marton_rc_row(const WeakCost& cost, const ConvexEnvelope1D& env,
                     double x) {
  const auto& bx = env.breakpoints_x();
  const auto& by = env.breakpoints_y();
  double best = kInf;
  for (std::size_t k = 0; k < bx.size(); ++k) {
    const double z = bx[k];
    const double zz = x - z;
    const double th = cost.theta() == MartonTheta::quadratic ? zz * zz
                                                             : std::abs(zz);
    best = std::min(best, by[k] + th);
  }
  if (cost.theta() == MartonTheta::absolute) {
    // |x - z| has its only extra kink at z = x.
    const ExtendedReal at_x = env.value_at(x);
    if (at_x < kInf) best = std::min(best, static_cast<double>(at_x));
    return best;
  }
  // Quadratic theta: per-segment stationary point z = x - s/2.
  for (std::size_t k = 0; k + 1 < bx.size(); ++k) {
    const double s = (by[k + 1] - by[k]) / (bx[k + 1] - bx[k]);
    const double z = std::clamp(x - 0.5 * s, bx[k], bx[k + 1]);
    const double t = (z - bx[k]) / (bx[k + 1] - bx[k]);
    const double envz = (1.0 - t) * by[k] + t * by[k + 1];
    best = std::min(best, envz + (x - z) * (x - z));
  }
  return best;
}

}  // namespace

std::vector<ExtendedReal> rc_transform(const WeakCost& cost,
                                       std::span<const double> phi) {
  if (phi.size() != cost.n_cols()) {
    throw ShapeMismatch("phi length must match columns");
  }
  for (double v : phi) {
    if (!std::isfinite(v)) {
      throw ValidationError("rc_transform requires finite phi");
    }
  }
  const std::size_t n1 = cost.n_rows();
  const std::size_t n2 = cost.n_cols();
  std::vector<ExtendedReal> out(n1, kInf);

  switch (cost.kind()) {
    case CostKind::linear: {
      for (std::size_t i = 0; i < n1; ++i) {
        double best = kInf;
        for (std::size_t j = 0; j < n2; ++j) {
          best = std::min(best, cost.c(i, j) + phi[j]);
        }
        out[i] = best;
      }
      return out;
    }
    case CostKind::martingale: {
      std::vector<double> xs(n2), ys(n2);
      for (std::size_t j = 0; j < n2; ++j) xs[j] = cost.cols()->coord(j);
      // column coordinates of a ground set are not sorted in general
      std::vector<std::size_t> order(n2);
      for (std::size_t j = 0; j < n2; ++j) order[j] = j;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
      std::vector<double> sx(n2), sy(n2);
      for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t k = 0; k < n2; ++k) {
          sx[k] = xs[order[k]];
          sy[k] = cost.c(i, order[k]) + phi[order[k]];
        }
        bool any_finite = false;
        for (double v : sy) any_finite = any_finite || (v < kInf);
        if (!any_finite) continue;
        const ConvexEnvelope1D env = convex_envelope_1d(sx, sy);
        out[i] = env.value_at(cost.rows()->coord(i));
      }
      return out;
    }
    case CostKind::marton: {
      if (!cost.cols()->is_1d()) {
        throw ValidationError("marton rc_transform is 1-D only");
      }
      const std::size_t n = n2;
      std::vector<double> xs(n);
      for (std::size_t j = 0; j < n; ++j) xs[j] = cost.cols()->coord(j);
      std::vector<std::size_t> order(n);
      for (std::size_t j = 0; j < n; ++j) order[j] = j;
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
      std::vector<double> sx(n), sy(n);
      for (std::size_t k = 0; k < n; ++k) {
        sx[k] = xs[order[k]];
        sy[k] = phi[order[k]];
      }
      const ConvexEnvelope1D env = convex_envelope_1d(sx, sy);
      for (std::size_t i = 0; i < n1; ++i) {
        out[i] = marton_rc_row(cost, env, cost.rows()->coord(i));
      }
      return out;
    }
  }
  return out;
}

}  // namespace woet
