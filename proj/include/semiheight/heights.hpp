#pragma once

// Global canonical heights and the canonical (curvature-zero, rigidified)
// metric on the degree-zero bundle attached to an extension parameter Q0.
//
// lambda_D is realized as a difference of translated canonical local heights,
//   lambda_D(P, v) = lambda_v(P+Q0+R) - lambda_v(P+R) - lambda_v(Q0+R) + lambda_v(R),
// which is manifestly curvature-zero, vanishes at the origin, and satisfies
//   sum_v lambda_D(P, v) = <P, Q0>   (Neron-Tate pairing).
// The reference divisor underlying this realization is (-Q0-R) - (-R); its
// orientation is pinned by the theorem-of-the-square difference identity
// deg H_0 - deg H_inf = <base, Q0>, not by any coordinate-letter convention.
//
// canonical_height has two independent evaluation routes: the per-place sum
// (primary) and a certified Tate-limit evaluation (oracle) that uses only the
// nonsingular-reduction test, denominators, and the plain scaled limit of
// naive heights along the real duplication orbit.

#include "semiheight/config.hpp"
#include "semiheight/local_heights.hpp"

#include <set>

namespace semiheight {

struct collision_error : math_error {
  using math_error::math_error;
};

class DivisorClassParam {
 public:
  DivisorClassParam(const EllipticCurve& curve, const CurvePoint& q0, const CurvePoint& r)
      : given_(curve), min_(minimal_model(curve)) {
    if (!on_curve(curve, q0)) throw math_error("DivisorClassParam: Q0 not on the curve");
    if (!on_curve(curve, r)) throw math_error("DivisorClassParam: R not on the curve");
    TransformedModel tm = min_.transformed();
    q0_ = tm.apply(q0);
    r_ = tm.apply(r);
    check_admissible(min_.curve, q0_, r_);
  }

  // the divisor support must stay clear of every evaluation point
  static void check_admissible(const EllipticCurve& e, const CurvePoint& q0,
                               const CurvePoint& r) {
    CurvePoint q0r = ec_add(e, q0, r);
    std::vector<CurvePoint> pts = {r, q0r, ec_neg(e, r), ec_neg(e, q0r)};
    for (auto& p : pts)
      if (p.is_infinity())
        throw math_error("DivisorClassParam: reference divisor meets the origin");
    for (size_t i = 0; i < pts.size(); ++i)
      for (size_t j = i + 1; j < pts.size(); ++j)
        if (pts[i] == pts[j])
          throw math_error("DivisorClassParam: reference divisor has collapsed support");
  }

  const EllipticCurve& curve() const { return min_.curve; }          // minimal model
  const EllipticCurve& given_curve() const { return given_; }
  const ModelMap& to_minimal() const { return min_.map; }
  const CurvePoint& q0() const { return q0_; }  // on the minimal model
  const CurvePoint& r() const { return r_; }    // on the minimal model

  CurvePoint to_minimal_point(const CurvePoint& p) const { return min_.transformed().apply(p); }

  // evaluation of lambda_D at P requires P + Q0 + R != O and P + R != O
  void check_evaluation_point(const CurvePoint& p_min) const {
    const EllipticCurve& e = min_.curve;
    if (ec_add(e, p_min, r_).is_infinity())
      throw collision_error("support collision: P + R = O (P hits -R)");
    if (ec_add(e, ec_add(e, p_min, q0_), r_).is_infinity())
      throw collision_error("support collision: P + Q0 + R = O (P hits -Q0-R)");
  }

  DivisorClassParam with_reference(const CurvePoint& new_r_min) const {
    DivisorClassParam out(*this);
    check_admissible(min_.curve, q0_, new_r_min);
    out.r_ = new_r_min;
    return out;
  }

 private:
  EllipticCurve given_;
  MinimalModel min_;
  CurvePoint q0_ = CurvePoint::infinity();
  CurvePoint r_ = CurvePoint::infinity();
};

// lambda_D at a point already on the minimal model.
inline LocalHeightValue lambda_D_min(const DivisorClassParam& param, const CurvePoint& p,
                                     const Place& v, const JobConfig& cfg = {}) {
  if (p.is_infinity()) {
    // rigidification at the origin
    if (v.is_finite()) return LocalHeightValue::finite(v, Rational(0));
    return LocalHeightValue::archimedean(RealValue::exact_zero());
  }
  param.check_evaluation_point(p);
  const EllipticCurve& e = param.curve();
  CurvePoint a = ec_add(e, ec_add(e, p, param.q0()), param.r());
  CurvePoint b = ec_add(e, p, param.r());
  CurvePoint c = ec_add(e, param.q0(), param.r());
  CurvePoint d = param.r();
  double t = cfg.arch_target() / 8;
  LocalHeightValue la = lambda_v(e, a, v, t, cfg.prec_bits());
  LocalHeightValue lb = lambda_v(e, b, v, t, cfg.prec_bits());
  LocalHeightValue lc = lambda_v(e, c, v, t, cfg.prec_bits());
  LocalHeightValue ld = lambda_v(e, d, v, t, cfg.prec_bits());
  return la - lb - lc + ld;
}

// lambda_D for a point on the model the param was constructed with.
inline LocalHeightValue lambda_D(const DivisorClassParam& param, const CurvePoint& p,
                                 const Place& v, const JobConfig& cfg = {}) {
  return lambda_D_min(param, param.to_minimal_point(p), v, cfg);
}

struct LambdaDWithRetry {
  LocalHeightValue value;
  CurvePoint reference_used;  // on the minimal model
  bool translated = false;
};

// deterministic reference-point candidates: small multiples of Q0 shifted by
// small integral points found by bounded x-scan
inline std::vector<CurvePoint> reference_candidates(const EllipticCurve& e, const CurvePoint& q0,
                                                    int count = 24) {
  std::vector<CurvePoint> shifts = {CurvePoint::infinity()};
  for (long x = -24; x <= 24 && static_cast<long>(shifts.size()) < 12; ++x) {
    // y^2 + (a1 x + a3) y = x^3 + a2 x^2 + a4 x + a6
    Rational xr(x);
    Rational lin = Rational(e.a1()) * xr + Rational(e.a3());
    Rational rhs = xr * xr * xr + Rational(e.a2()) * xr * xr + Rational(e.a4()) * xr +
                   Rational(e.a6());
    Rational disc = lin * lin + 4 * rhs;
    if (disc < 0) continue;
    Int dn = num(disc), dd = den(disc);
    Int sn, sd;
    if (!mpz_perfect_square_p(dn.get_mpz_t()) || !mpz_perfect_square_p(dd.get_mpz_t())) continue;
    mpz_sqrt(sn.get_mpz_t(), dn.get_mpz_t());
    mpz_sqrt(sd.get_mpz_t(), dd.get_mpz_t());
    Rational s = make_rational(sn, sd);
    Rational y = (-lin + s) / 2;
    shifts.push_back(CurvePoint::affine(xr, y));
  }
  std::vector<CurvePoint> out;
  std::set<std::string> seen;
  for (long j : {1L, 2L, 3L}) {
    for (long k : {2L, 3L, 4L, 5L, 1L}) {
      for (const CurvePoint& s : shifts) {
        if (static_cast<int>(out.size()) >= count) return out;
        CurvePoint cand = ec_add(e, ec_mul(e, k, q0), ec_mul(e, j, s));
        if (cand.is_infinity()) continue;
        if (!seen.insert(cand.str()).second) continue;
        try {
          DivisorClassParam::check_admissible(e, q0, cand);
          out.push_back(cand);
        } catch (const math_error&) {
        }
      }
    }
  }
  return out;
}

// lambda_D with automatic reference translation on support collision.
inline LambdaDWithRetry lambda_D_auto(const DivisorClassParam& param, const CurvePoint& p,
                                      const Place& v, const JobConfig& cfg = {}) {
  CurvePoint pm = param.to_minimal_point(p);
  try {
    return {lambda_D_min(param, pm, v, cfg), param.r(), false};
  } catch (const collision_error&) {
  }
  for (const CurvePoint& cand : reference_candidates(param.curve(), param.q0(),
                                                     cfg.reference_candidates)) {
    if (cand == param.r()) continue;
    try {
      DivisorClassParam alt = param.with_reference(cand);
      return {lambda_D_min(alt, pm, v, cfg), cand, true};
    } catch (const math_error&) {
    }
  }
  throw collision_error("lambda_D: no admissible reference translation found");
}

// --- canonical heights -------------------------------------------------------

// Primary route: sum of canonical local heights over the finite support set.
inline RealValue canonical_height(const EllipticCurve& e, const CurvePoint& p,
                                  const JobConfig& cfg = {}) {
  if (is_torsion(e, p).torsion) return RealValue::exact_zero();
  MinimalModel mm = minimal_model(e);
  CurvePoint pm = mm.transformed().apply(p);
  mpfr_prec_t prec = cfg.prec_bits();
  std::vector<Int> bad;
  for (auto& [q, v] : factor(mm.curve.discriminant())) bad.push_back(q);
  RealValue total = lambda_arch(mm.curve, pm, cfg.arch_target(), prec);
  for (const Int& q : bad) {
    Rational c = lambda_p_coeff(mm.curve, pm, q);
    if (c != 0) total += RealValue::log_of_int(q, prec) * c;
  }
  // good primes contribute (1/2) max(0, -v_p(x)) log p; their product is the
  // bad-stripped denominator of x
  Int dgood = strip_primes(den(pm.x()), bad);
  if (dgood > 1) total += RealValue::log_of_int(dgood, prec).mul_2si(-1);
  return total;
}

// Independent route: Tate's limit hhat = lim 4^{-k} naive_height([2^k] P),
// evaluated with a certified tail. The iterate is first moved into the
// identity component at every bad prime (multiplying by c and dividing the
// height by c^2), where the finite part of the naive height is exactly the
// canonical one; the archimedean remainder is the plain scaled limit along
// the real duplication orbit with tail bounded by the curve delta-bound.
struct TateLimitHeight {
  RealValue value;
  int component_multiple;   // c
  int exact_doublings;      // K1
  int real_doublings;       // m
  double certified_tail;    // contribution of the dropped tail to value's error
};

inline TateLimitHeight canonical_height_tate(const EllipticCurve& e, const CurvePoint& p,
                                             const JobConfig& cfg = {}, int exact_depth = 8,
                                             int real_depth = 18) {
  MinimalModel mm = minimal_model(e);
  CurvePoint pm = mm.transformed().apply(p);
  if (is_torsion(e, p).torsion)
    return {RealValue::exact_zero(), 1, exact_depth, real_depth, 0.0};
  std::vector<Int> bad;
  for (auto& [q, v] : factor(mm.curve.discriminant())) bad.push_back(q);

  int c = 0;
  CurvePoint base = CurvePoint::infinity();
  for (int m = 1; m <= 256; ++m) {
    base = ec_add(mm.curve, base, pm);
    bool ok = !base.is_infinity();
    for (const Int& q : bad)
      if (ok && !nonsingular_at(mm.curve, base, q)) ok = false;
    if (ok) {
      c = m;
      break;
    }
  }
  if (c == 0) throw math_error("canonical_height_tate: no component-clearing multiple found");

  CurvePoint it = base;
  for (int k = 0; k < exact_depth; ++k) it = ec_add(mm.curve, it, it);

  // hhat(QK) = (1/2) log den x(QK)                   [exact; identity component]
  //          + sum_{j<m} 4^{-(j+1)} log|psi2(2^j QK)| [finite parts re-expressed
  //                                                    through the product formula]
  //          + 4^{-m} * (1/2) log+ |x(2^m QK)|        [plain scaled naive limit]
  //          +- 4^{-m} B/6                            [certified tail]
  double B = dyn::delta_sup_bound(mm.curve);
  double tail = std::ldexp(B / 6.0, -2 * real_depth);
  double tail_scaled = std::ldexp(tail, -2 * exact_depth) / (c * static_cast<double>(c));
  mpfr_prec_t prec = std::max<mpfr_prec_t>(cfg.prec_bits(), 256);
  for (int attempt = 0; attempt < 8; ++attempt) {
    // finite naive part = canonical finite part on the identity component
    RealValue fin = den(it.x()) > 1 ? RealValue::log_of_int(den(it.x()), prec).mul_2si(-1)
                                    : RealValue::exact_zero();
    dyn::RealOrbit orbit = dyn::RealOrbit::start(mm.curve, it.x(), prec);
    RealValue psi_sum(prec);
    for (int n = 0; n < real_depth; ++n) {
      RealValue log_f = orbit.step(mm.curve, prec).log_f;
      psi_sum += log_f.mul_2si(-2 * (n + 1) - 1);  // 4^{-(n+1)} * (1/2) log|f|
    }
    RealValue arch = orbit.naive(prec).mul_2si(-2 * real_depth).widened(tail);
    RealValue total = (fin + psi_sum + arch).mul_2si(-2 * exact_depth);
    total = total * make_rational(Int(1), Int(c) * c);
    if (total.certified(tail_scaled * 4 + 1e-25))
      return {total, c, exact_depth, real_depth, tail_scaled};
    prec *= 2;
  }
  throw precision_error("canonical_height_tate: failed to certify");
}

// Neron-Tate pairing <P, Q> = hhat(P+Q) - hhat(P) - hhat(Q).
inline RealValue nt_pairing(const EllipticCurve& e, const CurvePoint& p, const CurvePoint& q,
                            const JobConfig& cfg = {}) {
  if (is_torsion(e, p).torsion || is_torsion(e, q).torsion) return RealValue::exact_zero();
  return canonical_height(e, ec_add(e, p, q), cfg) - canonical_height(e, p, cfg) -
         canonical_height(e, q, cfg);
}

}  // namespace semiheight
