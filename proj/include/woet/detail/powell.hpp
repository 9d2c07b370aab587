#pragma once

#include <functional>
#include <vector>

namespace woet::detail {

// Derivative-free concave maximisation: Powell's direction-set method with
// golden-section line searches. Reliable at the small dimensions the dual
// ascent routines work in; not meant for large-scale use.
struct PowellOptions {
  std::size_t max_sweeps = 80;
  double ftol = 1e-12;       // relative sweep-gain stopping threshold
  double initial_step = 1.0;
};

struct PowellResult {
  double value = 0.0;
  std::size_t sweeps = 0;
  bool converged = false;
};

PowellResult powell_maximize(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double>* x, const PowellOptions& opts = {});

}  // namespace woet::detail
