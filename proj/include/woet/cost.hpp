#pragma once

#include <span>
#include <vector>

#include "woet/extended_real.hpp"
#include "woet/measures.hpp"

namespace woet {

enum class CostKind {
  linear,      // C(x_i, p) = sum_j c_ij p_j
  martingale,  // linear cost, +inf unless mean(p) = x_i (1-D ground)
  marton,      // C(x, p) = theta(x - mean(p))
};

enum class MartonTheta {
  quadratic,  // theta(z) = |z|^2
  absolute,   // theta(z) = |z|, 1-D only
};

// Piecewise-linear lower convex hull of a finite 1-D point set. Points with
// y = +inf are ignored; evaluation outside the finite support is +inf.
class ConvexEnvelope1D {
 public:
  ConvexEnvelope1D(std::vector<double> xs, std::vector<double> ys);

  const std::vector<double>& breakpoints_x() const { return xs_; }
  const std::vector<double>& breakpoints_y() const { return ys_; }
  std::vector<double> slopes() const;

  ExtendedReal value_at(double x) const;
  double support_lo() const { return xs_.front(); }
  double support_hi() const { return xs_.back(); }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

// xs strictly increasing, ys extended-real with at least one finite entry.
ConvexEnvelope1D convex_envelope_1d(std::span<const double> xs,
                                    std::span<const double> ys);

// A member of the weak-cost catalog. Values are extended-real; every member
// is convex in the probability argument and bounded below by lower_bound().
class WeakCost {
 public:
  static WeakCost linear(GroundPtr rows, GroundPtr cols,
                         std::vector<double> c_matrix);
  // Rows and columns share the 1-D ground `x`.
  static WeakCost martingale(GroundPtr x, std::vector<double> c_matrix);
  static WeakCost marton(GroundPtr rows, GroundPtr cols, MartonTheta theta);

  CostKind kind() const { return kind_; }
  MartonTheta theta() const { return theta_; }
  const GroundPtr& rows() const { return rows_; }
  const GroundPtr& cols() const { return cols_; }
  std::size_t n_rows() const { return rows_->size(); }
  std::size_t n_cols() const { return cols_->size(); }
  double lower_bound() const { return lower_bound_; }
  bool has_matrix() const { return !c_.empty(); }
  double c(std::size_t i, std::size_t j) const { return c_[i * n_cols_ + j]; }
  const std::vector<double>& c_matrix() const { return c_; }

  // Tolerance on |mean(p) - x_i| used when reporting martingale values; the
  // solver enforces the constraint through linear equations instead.
  double mean_tol() const;

  // C(x_i, p) for a probability weight vector p over the columns.
  ExtendedReal value(std::size_t row, std::span<const double> p) const;

  // m * C(x_i, row/m) with the null-row convention (0 at m = 0).
  ExtendedReal row_perspective(std::size_t row,
                               std::span<const double> row_masses) const;

  ExtendedReal theta_value(std::span<const double> z) const;

 private:
  WeakCost(CostKind kind, GroundPtr rows, GroundPtr cols,
           std::vector<double> c_matrix, MartonTheta theta);

  CostKind kind_;
  GroundPtr rows_;
  GroundPtr cols_;
  std::size_t n_cols_ = 0;
  std::vector<double> c_;  // row-major; empty for marton
  MartonTheta theta_ = MartonTheta::quadratic;
  double lower_bound_ = 0.0;
};

// R_C phi(x_i) = inf over p of { C(x_i, p) + p(phi) }, one value per row.
// Exact for all three catalog kinds: vertex minimum for linear, lower convex
// envelope for martingale, envelope-plus-theta minimisation for marton.
std::vector<ExtendedReal> rc_transform(const WeakCost& cost,
                                       std::span<const double> phi);

}  // namespace woet
