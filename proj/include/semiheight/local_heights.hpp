#pragma once

// Canonical local heights lambda_v on an elliptic curve, normalized so that
//   sum_v lambda_v(P) = hhat(P) = lim 4^{-k} * (1/2) log max(|num x|, den x)([2^k]P)
// and the exact functional equations
//   lambda_v([m]P) = m^2 lambda_v(P) - log|psi_m(P)|_v
//   lambda_v(P+Q) + lambda_v(P-Q) = 2 lambda_v(P) + 2 lambda_v(Q) - log|x(P)-x(Q)|_v
// hold at every place. At good-reduction points lambda_p = (1/2) log+ |x|_p.
//
// The archimedean value is the telescoped duplication series
//   lambda_inf(P) = (1/2) [ log+|x| + sum_{n>=0} 4^{-(n+1)} delta(2^n P) ],
//   delta(x) = log max(|g(x)|, |f(x)|) - 4 log max(|x|, 1),
// with f, g the duplication denominator/numerator (x(2P) = g/f). delta is
// continuous and bounded on E(R) and the tail after N terms is at most
// B * 4^{-N} / 6 where B >= sup |delta|; B is certified once per curve by
// exact rational branch-and-bound.

#include "semiheight/config.hpp"
#include "semiheight/elliptic_curve.hpp"
#include "semiheight/local_value.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <unordered_map>

namespace semiheight {

struct precision_error : math_error {
  using math_error::math_error;
};

namespace dyn {

// duplication on x-coordinates: x(2P) = g(x)/f(x)
inline Rational f_poly(const EllipticCurve& e, const Rational& x) {
  return ((4 * x + Rational(e.b2())) * x + 2 * Rational(e.b4())) * x + Rational(e.b6());
}
inline Rational g_poly(const EllipticCurve& e, const Rational& x) {
  return ((x * x - Rational(e.b4())) * x - 2 * Rational(e.b6())) * x - Rational(e.b8());
}

// certified sup bound for |delta| over the real line (hence over E(R))
inline double delta_sup_bound_uncached(const EllipticCurve& e) {
  Int C1 = 5 + abs(e.b2()) + 3 * abs(e.b4()) + 3 * abs(e.b6()) + abs(e.b8());
  double upper = std::log(C1.get_d()) * 1.0000001 + 1e-9;

  Int K = abs(e.b4()) + 2 * abs(e.b6()) + abs(e.b8());
  Int R0(1);
  while (R0 * R0 < 2 * K) ++R0;  // |x| >= R0 gives |g| >= x^4 / 2

  auto absf = [&](const Rational& x) {
    Rational v = f_poly(e, x);
    return v < 0 ? Rational(-v) : v;
  };
  auto absg = [&](const Rational& x) {
    Rational v = g_poly(e, x);
    return v < 0 ? Rational(-v) : v;
  };
  // Lipschitz bounds for f, g on [-X, X]
  auto lip = [&](const Rational& X) {
    Rational lf = 12 * X * X + 2 * Rational(abs(e.b2())) * X + 2 * Rational(abs(e.b4()));
    Rational lg = 4 * X * X * X + 2 * Rational(abs(e.b4())) * X + 2 * Rational(abs(e.b6()));
    return lf > lg ? lf : lg;
  };

  Rational m0(1, 2);  // the |x| >= R0 region contributes at least 1/2
  std::deque<std::pair<Rational, Rational>> queue;
  queue.emplace_back(Rational(-R0), Rational(R0));
  long budget = 200000;
  while (!queue.empty()) {
    if (--budget < 0) throw math_error("delta_sup_bound: subdivision budget exhausted");
    auto [a, b] = queue.front();
    queue.pop_front();
    Rational mid = (a + b) / 2, half = (b - a) / 2;
    Rational X = std::max(Rational(abs(num(a)), den(a)), Rational(abs(num(b)), den(b)));
    if (X < 1) X = 1;
    Rational L = lip(X > 1 ? X : Rational(1));
    Rational fm = absf(mid), gm = absg(mid);
    Rational lo = std::max(fm, gm) - L * half;
    if (lo > 0) {
      Rational denom = rational_pow(X, 4);
      Rational mlo = lo / denom;
      if (mlo < m0) m0 = mlo;
      continue;
    }
    queue.emplace_back(a, mid);
    queue.emplace_back(mid, b);
  }
  double lower_log = -std::log(m0.get_d()) * 1.0000001 + 1e-9;
  return std::max({upper, lower_log, 1.0});
}

inline double delta_sup_bound(const EllipticCurve& e) {
  static std::mutex mu;
  static std::unordered_map<std::string, double> cache;
  std::string key = e.str();
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  double b = delta_sup_bound_uncached(e);
  cache.emplace(std::move(key), b);
  return b;
}

// Dynamical state for the real duplication map, kept in whichever of the
// charts x or t = 1/x has bounded coordinate.
struct RealOrbit {
  bool x_chart;
  RealValue coord;

  struct StepInfo {
    RealValue delta;  // log max(|g|,|f|) - 4 log max(|x|,1) at the current point
    RealValue log_f;  // log |f(x)| = 2 log |psi2| at the current point
  };

  static RealOrbit start(const EllipticCurve&, const Rational& x0, mpfr_prec_t prec) {
    Rational ax(abs(num(x0)), den(x0));
    if (ax > 2) return RealOrbit{false, RealValue::of_rational(Rational(1) / x0, prec)};
    return RealOrbit{true, RealValue::of_rational(x0, prec)};
  }

  // naive local height (1/2) log max(|x|, 1) at the current point
  RealValue naive(mpfr_prec_t prec) const {
    if (x_chart) {
      RealValue one = RealValue::of_int(1, prec);
      return RealValue::max_abs(coord, one).log().mul_2si(-1);
    }
    return (-coord.abs().log()).mul_2si(-1);
  }

  // advances to the coordinate of 2P, reporting data at the point left behind
  StepInfo step(const EllipticCurve& e, mpfr_prec_t prec) {
    if (x_chart) {
      const RealValue& x = coord;
      RealValue B = horner_eval({Int(4), e.b2(), 2 * e.b4(), e.b6()}, x);   // f(x)
      RealValue A = horner_eval({Int(1), Int(0), -e.b4(), -2 * e.b6(), -e.b8()}, x);  // g(x)
      RealValue one = RealValue::of_int(1, prec);
      RealValue delta =
          RealValue::max_abs(A, B).log() - RealValue::max_abs(x, one).log().mul_2si(2);
      RealValue log_f = B.abs().log();
      if (std::fabs(A.to_double()) > 2 * std::fabs(B.to_double())) {
        x_chart = false;
        coord = B / A;  // t' = f/g
      } else {
        coord = A / B;  // x' = g/f
      }
      return {delta, log_f};
    }
    const RealValue& t = coord;
    RealValue W = horner_eval({e.b6(), 2 * e.b4(), e.b2(), Int(4), Int(0)}, t);    // t^4 f(1/t)
    RealValue Z = horner_eval({-e.b8(), -2 * e.b6(), -e.b4(), Int(0), Int(1)}, t); // t^4 g(1/t)
    RealValue delta = RealValue::max_abs(Z, W).log();
    RealValue log_f = W.abs().log() - t.abs().log().mul_2si(2);
    if (2 * std::fabs(W.to_double()) < std::fabs(Z.to_double())) {
      coord = W / Z;  // t' = w/z
    } else {
      x_chart = true;
      coord = Z / W;  // x' = z/w
    }
    return {delta, log_f};
  }
};

}  // namespace dyn

// Canonical archimedean local height with certified absolute error <= target.
inline RealValue lambda_arch(const EllipticCurve& e, const CurvePoint& p, double target,
                             mpfr_prec_t prec_hint = 0) {
  if (p.is_infinity()) throw math_error("lambda_arch: logarithmic singularity at infinity");
  if (target <= 0) throw math_error("lambda_arch: target error must be positive");

  TorsionResult tors = is_torsion(e, p);
  mpfr_prec_t prec = prec_hint ? prec_hint : 192;
  if (tors.torsion) {
    // the duplication orbit of a torsion point may hit O; use the exact
    // multiplication relation lambda = log|psi_{N+1}(P)| / ((N+1)^2 - 1)
    int m = tors.order + 1;
    Rational psi = division_poly_value(e, p, m);
    if (psi == 0) throw math_error("lambda_arch: unexpected psi vanishing");
    Rational a(abs(num(psi)), den(psi));
    for (int attempt = 0; attempt < 8; ++attempt) {
      RealValue r = RealValue::log_of_rational(a, prec) * make_rational(1, Int(m) * m - 1);
      if (r.certified(target)) return r;
      prec *= 2;
    }
    throw precision_error("lambda_arch: torsion branch failed to certify");
  }

  double B = dyn::delta_sup_bound(e);
  int steps = 1;
  while (std::ldexp(B / 6.0, -2 * steps) > target / 2 && steps < 64) ++steps;
  double tail = std::ldexp(B / 6.0, -2 * steps);

  const Rational& x0 = p.x();
  for (int attempt = 0; attempt < 10; ++attempt) {
    dyn::RealOrbit orbit = dyn::RealOrbit::start(e, x0, prec);
    RealValue sum(prec);
    bool degenerate = false;
    for (int n = 0; n < steps; ++n) {
      RealValue d = orbit.step(e, prec).delta;
      if (!d.certified(1e6) || !orbit.coord.certified(1e6)) {
        degenerate = true;
        break;
      }
      sum += d.mul_2si(-2 * (n + 1));
    }
    if (!degenerate) {
      Rational ax(abs(num(x0)), den(x0));
      RealValue l0 = ax <= 1 ? RealValue::exact_zero() : RealValue::log_of_rational(ax, prec);
      RealValue lam = (l0 + sum).mul_2si(-1).widened(tail);
      if (lam.certified(target)) return lam;
    }
    prec *= 2;
  }
  throw precision_error("lambda_arch: failed to certify at requested precision");
}

// Exact canonical local height coefficient at a finite place: the returned
// rational c means lambda_p(P) = c * log p. The model must be minimal at p.
inline Rational lambda_p_coeff(const EllipticCurve& e, const CurvePoint& p_pt, const Int& p) {
  if (p_pt.is_infinity()) throw math_error("lambda_p: logarithmic singularity at infinity");
  if (!is_prime(p)) throw math_error("lambda_p: " + p.get_str() + " is not prime");

  long vx = valuation_sat(p_pt.x(), p);
  if (vx < 0) return make_rational(-vx, 2);

  long vpsi2 = valuation_sat(e.psi2(p_pt), p);
  long vphi = valuation_sat(e.phi(p_pt), p);
  if (vpsi2 <= 0 || vphi <= 0) return Rational(0);  // nonsingular reduction, integral x

  // P reduces to the singular point; reduce to the identity component
  long vdisc = valuation(e.discriminant(), p);
  long cap = std::max<long>(vdisc, 4) + 1;
  CurvePoint q = p_pt;
  for (long m = 2; m <= cap + 1; ++m) {
    q = ec_add(e, q, p_pt);
    if (q.is_infinity()) {
      // torsion of exact order m
      long mm = m + 1;
      Rational psi = division_poly_value(e, p_pt, static_cast<int>(mm));
      return make_rational(-valuation(psi, p), mm * mm - 1);
    }
    bool nonsingular;
    long vqx = valuation_sat(q.x(), p);
    if (vqx < 0) {
      nonsingular = true;
    } else {
      long v2 = valuation_sat(e.psi2(q), p);
      long v3 = valuation_sat(e.phi(q), p);
      nonsingular = (v2 <= 0 || v3 <= 0);
    }
    if (nonsingular) {
      Rational psi = division_poly_value(e, p_pt, static_cast<int>(m));
      Rational base = vqx < 0 ? make_rational(-vqx, 2) : Rational(0);
      return (base - Rational(valuation(psi, p))) / Rational(Int(m) * m);
    }
  }
  throw math_error("lambda_p: component reduction did not terminate");
}

inline LocalHeightValue lambda_v(const EllipticCurve& e, const CurvePoint& p, const Place& v,
                                 double arch_target, mpfr_prec_t prec = 0) {
  if (v.is_finite()) return LocalHeightValue::finite(v, lambda_p_coeff(e, p, v.prime()));
  return LocalHeightValue::archimedean(lambda_arch(e, p, arch_target, prec));
}

// Naive (Weil) height: half the log height of the x-coordinate.
inline RealValue naive_height(const EllipticCurve&, const CurvePoint& p, mpfr_prec_t prec = 128) {
  if (p.is_infinity()) return RealValue::exact_zero();
  Int n = abs(num(p.x())), d = den(p.x());
  Int m = n > d ? n : d;
  if (m == 1) return RealValue::exact_zero();
  return RealValue::log_of_int(m, prec).mul_2si(-1);
}

// True when P does not reduce to a singular point of the fiber at p.
inline bool nonsingular_at(const EllipticCurve& e, const CurvePoint& p, const Int& pr) {
  if (p.is_infinity()) return true;
  if (valuation_sat(p.x(), pr) < 0) return true;
  return !(valuation_sat(e.psi2(p), pr) > 0 && valuation_sat(e.phi(p), pr) > 0);
}

}  // namespace semiheight
