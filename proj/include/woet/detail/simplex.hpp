#pragma once

#include <cstddef>
#include <vector>

namespace woet::detail {

// Dense bounded-variable linear program:
//   min c'x  subject to  A x = b,  lo <= x <= up  (up entries may be +inf).
// Solved by a two-phase simplex with Bland fallback for anti-cycling.
// Intended for the small instances this project works at; rows and columns
// in the hundreds, not more.
struct LinearProgram {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> a;  // row-major, n_rows x n_cols
  std::vector<double> b;
  std::vector<double> c;
  std::vector<double> lo;
  std::vector<double> up;

  double& at(std::size_t i, std::size_t j) { return a[i * n_cols + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * n_cols + j]; }
};

enum class LpStatus { optimal, infeasible, unbounded, iter_limit };

struct LpResult {
  LpStatus status = LpStatus::iter_limit;
  std::vector<double> x;
  std::vector<double> dual;  // one multiplier per equality row
  double objective = 0.0;
  std::size_t iterations = 0;
};

LpResult solve_lp(const LinearProgram& lp, std::size_t max_iter = 50000);

}  // namespace woet::detail
