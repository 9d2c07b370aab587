#pragma once

#include <string>

#include "woet/extended_real.hpp"
#include "woet/measures.hpp"

namespace woet {

// Membership tests against entropy domains use this relative slack, so that
// marginals produced by the numeric solver (equal to their targets up to
// round-off) are not penalised with a spurious +inf.
inline constexpr double kDomainTol = 1e-9;

enum class EntropyKind {
  kl,             // F(s) = s log s - s + 1
  indicator_one,  // F(s) = 0 iff s = 1, else +inf
  range,          // F(s) = 0 iff s in [a, b], else +inf; 0 < a <= 1 <= b
  chi_squared,    // F(s) = (s - 1)^2
};

// A member of the admissible-entropy catalog together with all of its
// transforms: the conjugates F* and Fo, the reverse function R and its
// conjugate R*. All closed forms are cross-checked against grid oracles in
// the test suite.
class EntropyFunction {
 public:
  static EntropyFunction kl();
  static EntropyFunction indicator_one();
  static EntropyFunction range(double a, double b);
  static EntropyFunction chi_squared();

  EntropyKind kind() const { return kind_; }
  double range_lo() const { return a_; }
  double range_hi() const { return b_; }
  std::string name() const;

  // F(s) for s >= 0. KL uses the 0 log 0 = 0 convention, so F(0) = 1.
  ExtendedReal value(double s) const;

  // F'_inf = lim F(s)/s. +inf for every catalog member.
  ExtendedReal recession() const;

  // F(0); also the recession constant of R.
  ExtendedReal value_at_zero() const;

  // Fo(phi) = inf_{s>=0} (phi s + F(s)); concave and non-decreasing.
  ExtendedReal fcirc(double phi) const;
  // fcirc extended to infinite arguments: Fo(+inf) = F(0), Fo(-inf) = -inf.
  ExtendedReal fcirc_ext(ExtendedReal phi) const;

  // F*(phi) = sup_{s>=0} (s phi - F(s)) = -Fo(-phi).
  ExtendedReal fstar(double phi) const;

  // Reverse function R(r) = r F(1/r) for r > 0, R(0) = F'_inf.
  ExtendedReal reverse(double r) const;

  // Legendre conjugate of R; finite on (-inf, F(0)).
  ExtendedReal rstar(double psi) const;

  // Domain of F as an interval [lo, hi] (hi may be +inf).
  void domain(double* lo, double* hi) const;

  // Positive s with R(s) + R*(psi) = s psi. Throws PsiOutOfDomain for
  // psi >= F(0).
  double bm_witness(double psi) const;

 private:
  EntropyFunction(EntropyKind kind, double a, double b)
      : kind_(kind), a_(a), b_(b) {}

  EntropyKind kind_;
  double a_ = 0.0;  // range parameters; unused for other kinds
  double b_ = 0.0;
};

// F-divergence of gamma against mu: sum over {mu > 0} of mu F(gamma/mu)
// plus F'_inf times the gamma-mass singular to mu.
ExtendedReal divergence(const EntropyFunction& e, const DiscreteMeasure& gamma,
                        const DiscreteMeasure& mu);

// Reverse functional: sum over {gamma > 0} of gamma R(mu/gamma) plus
// R'_inf = F(0) times the mu-mass singular to gamma. Equals
// divergence(e, gamma, mu).
ExtendedReal reverse_functional(const EntropyFunction& e,
                                const DiscreteMeasure& mu,
                                const DiscreteMeasure& gamma);

}  // namespace woet
