#pragma once

#include <cmath>
#include <limits>

namespace woet {

// Extended reals are plain IEEE doubles; +/-inf are first-class values.
// The conventions that differ from raw IEEE arithmetic live here so every
// module shares them:
//   * mass terms multiply with 0 * inf = 0,
//   * the infimum over an empty set is +inf.
using ExtendedReal = double;

namespace xreal {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_finite(double v) { return std::isfinite(v); }

// weight * value with the convention 0 * (+-inf) = 0. Used wherever a
// measure-zero set multiplies an infinite density or recession constant.
inline double mass_mul(double weight, double value) {
  if (weight == 0.0) return 0.0;
  return weight * value;
}

// Running infimum initialised to "inf over the empty set".
inline constexpr double empty_inf() { return kInf; }

}  // namespace xreal

}  // namespace woet
