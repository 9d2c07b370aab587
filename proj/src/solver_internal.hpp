#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "woet/solver.hpp"

namespace woet::detail {

// Active-cell view of a problem. Superlinear entropies force the coupling
// marginals to vanish wherever the reference measures do, so rows and
// columns with zero mass are dropped before optimisation. Cells whose cost
// entry is +inf are kept but pinned to zero.
struct Trim {
  std::vector<std::size_t> rows;  // active row indices into the full ground
  std::vector<std::size_t> cols;
  std::vector<bool> pinned;       // active-cell flag: forced zero (inf cost)
  std::size_t nr = 0;
  std::size_t nc = 0;

  std::size_t cell(std::size_t r, std::size_t c) const { return r * nc + c; }
};

Trim make_trim(const ProblemSpec& spec);

// Objective evaluated on an active-cell buffer (row-major nr x nc).
ExtendedReal objective_on_cells(const ProblemSpec& spec, const Trim& trim,
                                std::span<const double> cells);

// Expand an active-cell buffer into a full coupling matrix.
Coupling expand_cells(const ProblemSpec& spec, const Trim& trim,
                      std::span<const double> cells);

// Marginal interval [lo, hi] imposed by an entropy kind on a mass target.
void marginal_band(const EntropyFunction& f, double mu, double* lo,
                   double* hi);

// True when the instance is a pure linear program: both entropies are
// indicator-type and the cost is linear in the coupling.
bool is_lp_instance(const ProblemSpec& spec);

// Euclidean projection of v onto {x >= 0, <x, d> = 0} (martingale row cone).
void project_martingale_row(std::span<const double> d, std::span<double> v);

}  // namespace woet::detail
