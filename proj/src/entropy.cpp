#include "woet/entropy.hpp"

#include <cmath>

#include "woet/errors.hpp"

namespace woet {

using xreal::kInf;

namespace {

// Membership in [lo, hi] with relative slack.
bool in_interval(double s, double lo, double hi) {
  const double slack = kDomainTol * std::max(1.0, std::max(std::abs(lo),
                                                           std::abs(hi)));
  return s >= lo - slack && s <= hi + slack;
}

}  // namespace

EntropyFunction EntropyFunction::kl() {
  return EntropyFunction(EntropyKind::kl, 0.0, 0.0);
}

EntropyFunction EntropyFunction::indicator_one() {
  return EntropyFunction(EntropyKind::indicator_one, 1.0, 1.0);
}

EntropyFunction EntropyFunction::range(double a, double b) {
  if (!(0.0 < a && a <= 1.0 && 1.0 <= b && std::isfinite(b))) {
    throw ValidationError("range entropy requires 0 < a <= 1 <= b < inf");
  }
  return EntropyFunction(EntropyKind::range, a, b);
}

EntropyFunction EntropyFunction::chi_squared() {
  return EntropyFunction(EntropyKind::chi_squared, 0.0, 0.0);
}

std::string EntropyFunction::name() const {
  switch (kind_) {
    case EntropyKind::kl: return "kl";
    case EntropyKind::indicator_one: return "indicator";
    case EntropyKind::range:
      return "range[" + std::to_string(a_) + "," + std::to_string(b_) + "]";
    case EntropyKind::chi_squared: return "chi2";
  }
  return "?";
}

ExtendedReal EntropyFunction::value(double s) const {
  if (!(s >= 0.0)) {
    throw NegativeArgument("entropy argument must be >= 0, got " +
                           std::to_string(s));
  }
  switch (kind_) {
    case EntropyKind::kl:
      if (s == 0.0) return 1.0;  // 0 log 0 = 0
      return s * std::log(s) - s + 1.0;
    case EntropyKind::indicator_one:
      return in_interval(s, 1.0, 1.0) ? 0.0 : kInf;
    case EntropyKind::range:
      return in_interval(s, a_, b_) ? 0.0 : kInf;
    case EntropyKind::chi_squared:
      return (s - 1.0) * (s - 1.0);
  }
  return kInf;
}

ExtendedReal EntropyFunction::recession() const {
  // All catalog members are superlinear.
  return kInf;
}

ExtendedReal EntropyFunction::value_at_zero() const {
  switch (kind_) {
    case EntropyKind::kl: return 1.0;
    case EntropyKind::indicator_one: return kInf;
    case EntropyKind::range: return kInf;  // a > 0
    case EntropyKind::chi_squared: return 1.0;
  }
  return kInf;
}

ExtendedReal EntropyFunction::fcirc(double phi) const {
  switch (kind_) {
    case EntropyKind::kl:
      // inf_s (phi s + s log s - s + 1) attained at s = e^{-phi}
      return 1.0 - std::exp(-phi);
    case EntropyKind::indicator_one:
      return phi;
    case EntropyKind::range:
      // inf over s in [a, b] of phi s
      return phi >= 0.0 ? a_ * phi : b_ * phi;
    case EntropyKind::chi_squared:
      // stationary point s = 1 - phi/2, clipped to s >= 0
      if (phi > 2.0) return 1.0;
      return phi - 0.25 * phi * phi;
  }
  return -kInf;
}

ExtendedReal EntropyFunction::fcirc_ext(ExtendedReal phi) const {
  if (phi == kInf) return value_at_zero();
  if (phi == -kInf) return -kInf;
  return fcirc(phi);
}

ExtendedReal EntropyFunction::fstar(double phi) const { return -fcirc(-phi); }

ExtendedReal EntropyFunction::reverse(double r) const {
  if (!(r >= 0.0)) {
    throw NegativeArgument("reverse argument must be >= 0, got " +
                           std::to_string(r));
  }
  if (r == 0.0) return recession();
  switch (kind_) {
    case EntropyKind::kl:
      return r - 1.0 - std::log(r);
    case EntropyKind::indicator_one:
      return in_interval(r, 1.0, 1.0) ? 0.0 : kInf;
    case EntropyKind::range:
      // support of r F(1/r) is [1/b, 1/a]
      return in_interval(r, 1.0 / b_, 1.0 / a_) ? 0.0 : kInf;
    case EntropyKind::chi_squared:
      return (r - 1.0) * (r - 1.0) / r;
  }
  return kInf;
}

ExtendedReal EntropyFunction::rstar(double psi) const {
  switch (kind_) {
    case EntropyKind::kl:
      if (psi >= 1.0) return kInf;
      return -std::log(1.0 - psi);
    case EntropyKind::indicator_one:
      return psi;
    case EntropyKind::range:
      // sup over r in [1/b, 1/a] of r psi
      return psi >= 0.0 ? psi / a_ : psi / b_;
    case EntropyKind::chi_squared:
      if (psi > 1.0) return kInf;
      return 2.0 - 2.0 * std::sqrt(1.0 - psi);
  }
  return kInf;
}

void EntropyFunction::domain(double* lo, double* hi) const {
  switch (kind_) {
    case EntropyKind::kl:
    case EntropyKind::chi_squared:
      *lo = 0.0;
      *hi = kInf;
      return;
    case EntropyKind::indicator_one:
      *lo = 1.0;
      *hi = 1.0;
      return;
    case EntropyKind::range:
      *lo = a_;
      *hi = b_;
      return;
  }
}

double EntropyFunction::bm_witness(double psi) const {
  const double f0 = value_at_zero();
  if (!(psi < f0)) {
    throw PsiOutOfDomain("bm_witness requires psi < F(0), got psi = " +
                         std::to_string(psi));
  }
  switch (kind_) {
    case EntropyKind::kl:
      return 1.0 / (1.0 - psi);
    case EntropyKind::indicator_one:
      return 1.0;
    case EntropyKind::range:
      // R = I_[1/b, 1/a]; equality R(s) + R*(psi) = s psi holds at the
      // endpoint matching the sign of psi.
      return psi >= 0.0 ? 1.0 / a_ : 1.0 / b_;
    case EntropyKind::chi_squared:
      return 1.0 / std::sqrt(1.0 - psi);
  }
  return 1.0;
}

ExtendedReal divergence(const EntropyFunction& e, const DiscreteMeasure& gamma,
                        const DiscreteMeasure& mu) {
  if (!gamma.same_ground(mu)) {
    throw GroundMismatch("divergence requires a shared ground set");
  }
  const LebesgueDecomposition dec = lebesgue_decompose(gamma, mu);
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu.weight(i) > 0.0) {
      const ExtendedReal f = e.value(dec.density[i]);
      if (f == kInf) return kInf;
      total += mu.weight(i) * f;
    }
  }
  const double singular = xreal::mass_mul(dec.singular_mass, e.recession());
  return total + singular;
}

ExtendedReal reverse_functional(const EntropyFunction& e,
                                const DiscreteMeasure& mu,
                                const DiscreteMeasure& gamma) {
  if (!gamma.same_ground(mu)) {
    throw GroundMismatch("reverse_functional requires a shared ground set");
  }
  // mu = rho * gamma + mu_perp
  const LebesgueDecomposition dec = lebesgue_decompose(mu, gamma);
  double total = 0.0;
  for (std::size_t i = 0; i < gamma.size(); ++i) {
    if (gamma.weight(i) > 0.0) {
      const ExtendedReal r = e.reverse(dec.density[i]);
      if (r == kInf) return kInf;
      total += gamma.weight(i) * r;
    }
  }
  // R'_inf = F(0)
  const double singular = xreal::mass_mul(dec.singular_mass,
                                          e.value_at_zero());
  return total + singular;
}

}  // namespace woet
