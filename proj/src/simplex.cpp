#include "woet/detail/simplex.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "woet/errors.hpp"

namespace woet::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-10;
constexpr double kBoundTol = 1e-10;

enum class VarState { basic, at_lower, at_upper };

// Working tableau over the structural columns plus one artificial per row.
class SimplexSolver {
 public:
  SimplexSolver(const LinearProgram& lp, std::size_t max_iter)
      : lp_(lp), m_(lp.n_rows), n_(lp.n_cols), max_iter_(max_iter) {
    total_ = n_ + m_;
    lo_ = lp.lo;
    up_ = lp.up;
    cost_.assign(total_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) cost_[j] = lp.c[j];
    lo_.resize(total_, 0.0);
    up_.resize(total_, kInf);
  }

  LpResult run() {
    LpResult out;
    init_basis();

    // Phase I: minimise the artificial mass.
    std::vector<double> phase1(total_, 0.0);
    for (std::size_t j = n_; j < total_; ++j) phase1[j] = 1.0;
    if (!iterate(phase1, &out)) return out;
    refresh_basics(&out);
    double art_mass = 0.0;
    for (std::size_t j = n_; j < total_; ++j) art_mass += value_[j];
    if (art_mass > 1e-7 * (1.0 + scale_)) {
      out.status = LpStatus::infeasible;
      return out;
    }
    // Pin artificials to zero for Phase II.
    for (std::size_t j = n_; j < total_; ++j) {
      lo_[j] = 0.0;
      up_[j] = 0.0;
      if (state_[j] == VarState::at_upper) state_[j] = VarState::at_lower;
      value_[j] = std::max(0.0, std::min(value_[j], 0.0));
    }

    if (!iterate(cost_, &out)) return out;
    refresh_basics(&out);

    out.status = LpStatus::optimal;
    out.x.assign(value_.begin(), value_.begin() + n_);
    out.objective = 0.0;
    for (std::size_t j = 0; j < n_; ++j) out.objective += lp_.c[j] * out.x[j];
    out.dual = dual_of(cost_);
    return out;
  }

 private:
  double column(std::size_t i, std::size_t j) const {
    if (j < n_) return lp_.at(i, j);
    return (j - n_ == i) ? art_sign_[i] : 0.0;
  }

  void init_basis() {
    state_.assign(total_, VarState::at_lower);
    value_.assign(total_, 0.0);
    scale_ = 0.0;
    for (double v : lp_.b) scale_ += std::abs(v);

    for (std::size_t j = 0; j < n_; ++j) {
      // start at the bound closest to zero
      double v = 0.0;
      v = std::max(v, lo_[j]);
      if (up_[j] < v) v = up_[j];
      if (v == up_[j] && std::isfinite(up_[j]) && up_[j] != lo_[j]) {
        state_[j] = VarState::at_upper;
      }
      value_[j] = v;
    }
    art_sign_.assign(m_, 1.0);
    basis_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      double resid = lp_.b[i];
      for (std::size_t j = 0; j < n_; ++j) resid -= lp_.at(i, j) * value_[j];
      art_sign_[i] = (resid >= 0.0) ? 1.0 : -1.0;
      basis_[i] = n_ + i;
      state_[n_ + i] = VarState::basic;
      value_[n_ + i] = std::abs(resid);
    }
  }

  // Solve B' y = c_B for the current basis.
  std::vector<double> dual_of(const std::vector<double>& cost) {
    Eigen::MatrixXd bmat(m_, m_);
    Eigen::VectorXd cb(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t k = 0; k < m_; ++k) bmat(i, k) = column(i, basis_[k]);
      cb(static_cast<Eigen::Index>(i)) = 0.0;
    }
    for (std::size_t k = 0; k < m_; ++k) cb(k) = cost[basis_[k]];
    Eigen::VectorXd y = bmat.transpose().partialPivLu().solve(cb);
    return std::vector<double>(y.data(), y.data() + m_);
  }

  // Recompute basic values from the nonbasic bounds (keeps drift in check).
  void refresh_basics(LpResult*) {
    Eigen::MatrixXd bmat(m_, m_);
    Eigen::VectorXd rhs(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      double r = lp_.b[i];
      for (std::size_t j = 0; j < total_; ++j) {
        if (state_[j] != VarState::basic) r -= column(i, j) * value_[j];
      }
      rhs(i) = r;
      for (std::size_t k = 0; k < m_; ++k) bmat(i, k) = column(i, basis_[k]);
    }
    Eigen::VectorXd xb = bmat.partialPivLu().solve(rhs);
    for (std::size_t k = 0; k < m_; ++k) value_[basis_[k]] = xb(k);
  }

  bool iterate(const std::vector<double>& cost, LpResult* out) {
    std::size_t stalled = 0;
    for (std::size_t it = 0; it < max_iter_; ++it) {
      ++out->iterations;
      refresh_basics(out);
      const std::vector<double> y = dual_of(cost);

      // entering variable
      const bool bland = stalled > 2 * (m_ + total_);
      std::size_t enter = total_;
      const double tol_d = kCostTol * (1.0 + scale_);
      double best_improve = 0.0;
      int dir = 0;
      for (std::size_t j = 0; j < total_; ++j) {
        if (state_[j] == VarState::basic || lo_[j] == up_[j]) continue;
        double d = cost[j];
        for (std::size_t i = 0; i < m_; ++i) d -= y[i] * column(i, j);
        double improve = 0.0;
        int cand_dir = 0;
        if (state_[j] == VarState::at_lower && d < -tol_d) {
          improve = -d;
          cand_dir = +1;
        } else if (state_[j] == VarState::at_upper && d > tol_d) {
          improve = d;
          cand_dir = -1;
        }
        if (cand_dir == 0) continue;
        if (bland) {
          enter = j;
          dir = cand_dir;
          break;
        }
        if (improve > best_improve) {
          best_improve = improve;
          enter = j;
          dir = cand_dir;
        }
      }
      if (enter == total_) return true;  // optimal for this phase

      // direction through the basis: w = B^{-1} A_enter
      Eigen::MatrixXd bmat(m_, m_);
      Eigen::VectorXd ae(m_);
      for (std::size_t i = 0; i < m_; ++i) {
        ae(i) = column(i, enter);
        for (std::size_t k = 0; k < m_; ++k) bmat(i, k) = column(i, basis_[k]);
      }
      Eigen::VectorXd w = bmat.partialPivLu().solve(ae);

      // ratio test; entering moves by t in direction `dir`
      double t_max = up_[enter] - lo_[enter];  // bound-flip step
      auto ratio = [&](std::size_t k, int* to) -> double {
        const double wk = dir * w(k);
        const std::size_t jb = basis_[k];
        if (wk > kPivotTol) {
          *to = -1;
          return std::max(0.0, value_[jb] - lo_[jb]) / wk;
        }
        if (wk < -kPivotTol && std::isfinite(up_[jb])) {
          *to = +1;
          return std::max(0.0, up_[jb] - value_[jb]) / (-wk);
        }
        *to = 0;
        return kInf;
      };
      for (std::size_t k = 0; k < m_; ++k) {
        int to;
        t_max = std::min(t_max, ratio(k, &to));
      }
      if (!std::isfinite(t_max)) {
        out->status = LpStatus::unbounded;
        return false;
      }
      // leaving row: among the blocking rows pick the largest pivot, or the
      // smallest basis index under Bland's rule
      std::size_t leave = m_;
      int leave_to = 0;
      double best_piv = 0.0;
      for (std::size_t k = 0; k < m_; ++k) {
        int to;
        const double t = ratio(k, &to);
        if (to == 0 || t > t_max + 1e-12) continue;
        const double piv = std::abs(w(k));
        if (bland) {
          if (leave == m_ || basis_[k] < basis_[leave]) {
            leave = k;
            leave_to = to;
          }
        } else if (piv > best_piv) {
          best_piv = piv;
          leave = k;
          leave_to = to;
        }
      }
      if (t_max <= 1e-13) {
        ++stalled;
      } else {
        stalled = 0;
      }

      // apply the step
      for (std::size_t k = 0; k < m_; ++k) {
        value_[basis_[k]] -= dir * t_max * w(k);
      }
      value_[enter] += dir * t_max;
      if (leave == m_) {
        // bound flip
        state_[enter] =
            (dir > 0) ? VarState::at_upper : VarState::at_lower;
        value_[enter] = (dir > 0) ? up_[enter] : lo_[enter];
      } else {
        const std::size_t jb = basis_[leave];
        state_[jb] = (leave_to < 0) ? VarState::at_lower : VarState::at_upper;
        value_[jb] = (leave_to < 0) ? lo_[jb] : up_[jb];
        basis_[leave] = enter;
        state_[enter] = VarState::basic;
      }
    }
    out->status = LpStatus::iter_limit;
    return false;
  }

  const LinearProgram& lp_;
  std::size_t m_, n_, total_;
  std::size_t max_iter_;
  std::vector<double> lo_, up_, cost_;
  std::vector<double> art_sign_;
  std::vector<std::size_t> basis_;
  std::vector<VarState> state_;
  std::vector<double> value_;
  double scale_ = 0.0;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, std::size_t max_iter) {
  if (lp.a.size() != lp.n_rows * lp.n_cols || lp.b.size() != lp.n_rows ||
      lp.c.size() != lp.n_cols || lp.lo.size() != lp.n_cols ||
      lp.up.size() != lp.n_cols) {
    throw ShapeMismatch("inconsistent LP dimensions");
  }
  SimplexSolver solver(lp, max_iter);
  return solver.run();
}

}  // namespace woet::detail
