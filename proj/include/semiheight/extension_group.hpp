#pragma once

// The extension of an elliptic curve by G_m attached to a parameter Q0, as a
// concrete group on pairs (P, t): base point plus nonzero fiber coordinate
// relative to the reference section of the divisor class.
//
// The group law is (P1, t1) + (P2, t2) = (P1 + P2, t1 t2 g(P1, P2)) where g
// is the value of the normalized rational function implementing the square
// isomorphism. g is evaluated exactly through chord/vertical line functions
// assembled to the divisor
//     div_X g(X, P2) = (-P2-R) + (-Q0-R) - (-P2-Q0-R) - (-R),
// normalized by g(., O) = g(O, .) = 1. With this orientation the canonical
// metric satisfies
//     lambda_D(P1+P2, v) - lambda_D(P1, v) - lambda_D(P2, v) = log|g(P1,P2)|_v,
// making the group law an isometry and the canonical fiber norm
// multiplicative.
//
// Coincidences between evaluation points and line zeros cancel in matched
// numerator/denominator pairs; each vanishing factor is replaced by its lead
// coefficient against the invariant differential, which keeps every value
// exact. Unmatched zeros are genuine support collisions.

#include "semiheight/heights.hpp"

#include <optional>

namespace semiheight {

struct ExtensionData {
  DivisorClassParam param;
  Rational debug_cocycle_scale = Rational(1);  // test hook for fault injection

  explicit ExtensionData(DivisorClassParam p) : param(std::move(p)) {}
  ExtensionData(const EllipticCurve& e, const CurvePoint& q0, const CurvePoint& r)
      : param(e, q0, r) {}

  const EllipticCurve& curve() const { return param.curve(); }

  bool base_admissible(const CurvePoint& p_min) const {
    if (p_min.is_infinity()) return true;
    const EllipticCurve& e = param.curve();
    return !ec_add(e, p_min, param.r()).is_infinity() &&
           !ec_add(e, ec_add(e, p_min, param.q0()), param.r()).is_infinity();
  }

  ExtensionData with_reference(const CurvePoint& new_r_min) const {
    ExtensionData out(param.with_reference(new_r_min));
    out.debug_cocycle_scale = debug_cocycle_scale;
    return out;
  }
};

// A point of the extension: base on the minimal model, t != 0 the fiber
// coordinate against the reference section.
struct ExtPoint {
  CurvePoint base;
  Rational t;

  bool operator==(const ExtPoint& o) const { return base == o.base && t == o.t; }
  bool operator!=(const ExtPoint& o) const { return !(*this == o); }
  std::string str() const { return base.str() + ";" + to_string(t); }
};

inline ExtPoint make_ext_point(const ExtensionData& data, const CurvePoint& base_given,
                               const Rational& t) {
  if (t == 0) throw math_error("ExtPoint: fiber coordinate must be nonzero");
  CurvePoint b = data.param.to_minimal_point(base_given);
  if (!on_curve(data.curve(), b)) throw math_error("ExtPoint: base not on the curve");
  if (!data.base_admissible(b))
    throw collision_error("ExtPoint: base meets the reference divisor support");
  return ExtPoint{b, t};
}

inline ExtPoint ext_neutral() { return ExtPoint{CurvePoint::infinity(), Rational(1)}; }

namespace lines {

// a chord/tangent/vertical line through S and T (both affine)
struct Line {
  bool vertical;
  Rational slope, offset;  // y - slope*x - offset, or x - offset for verticals

  Rational value(const CurvePoint& w) const {
    if (vertical) return w.x() - offset;
    return w.y() - slope * w.x() - offset;
  }
  // lead coefficient against the invariant differential at a simple zero W:
  // chord: phi(W) - slope * psi2(W); vertical: psi2(W)
  Rational lead(const EllipticCurve& e, const CurvePoint& w) const {
    if (vertical) return e.psi2(w);
    return e.phi(w) - slope * e.psi2(w);
  }
};

inline Line line_through(const EllipticCurve& e, const CurvePoint& s, const CurvePoint& t) {
  if (s.is_infinity() || t.is_infinity()) {
    const CurvePoint& a = s.is_infinity() ? t : s;
    if (a.is_infinity()) throw math_error("line_through: both points at infinity");
    return Line{true, Rational(0), a.x()};
  }
  if (s.x() == t.x() && s != t) return Line{true, Rational(0), s.x()};  // T = -S
  Rational slope;
  if (s == t) {
    Rational d = e.psi2(s);
    if (d == 0) return Line{true, Rational(0), s.x()};  // vertical tangent at 2-torsion
    slope = e.phi(s) / d;
  } else {
    slope = (t.y() - s.y()) / (t.x() - s.x());
  }
  return Line{false, slope, s.y() - slope * s.x()};
}

// one multiplicative factor of the cocycle evaluation
struct Factor {
  Rational value;
  Rational lead;  // valid when value == 0 and the zero is simple
};

inline Factor line_factor(const EllipticCurve& e, const Line& l, const CurvePoint& w) {
  Rational v = l.value(w);
  if (v != 0) return {v, Rational(0)};
  return {Rational(0), l.lead(e, w)};
}

inline Factor vertical_factor(const EllipticCurve& e, const Rational& x0, const CurvePoint& w) {
  Rational v = w.x() - x0;
  if (v != 0) return {v, Rational(0)};
  return {Rational(0), e.psi2(w)};
}

}  // namespace lines

namespace detail_ext {

// product of num-factors over product of den-factors with matched-zero
// cancellation; nullopt means a genuinely unmatched or higher-order zero
inline std::optional<Rational> balanced_ratio(const std::vector<lines::Factor>& nums,
                                              const std::vector<lines::Factor>& dens) {
  int zn = 0, zd = 0;
  for (auto& f : nums) zn += f.value == 0;
  for (auto& f : dens) zd += f.value == 0;
  if (zn != zd) return std::nullopt;
  Rational out(1);
  for (auto& f : nums) {
    const Rational& use = f.value == 0 ? f.lead : f.value;
    if (use == 0) return std::nullopt;  // higher-order zero
    out *= use;
  }
  for (auto& f : dens) {
    const Rational& use = f.value == 0 ? f.lead : f.value;
    if (use == 0) return std::nullopt;
    out /= use;
  }
  return out;
}

// raw cocycle evaluation with the fixed reference; nullopt = needs a fallback
inline std::optional<Rational> cocycle_raw(const DivisorClassParam& param, const CurvePoint& p1,
                                           const CurvePoint& p2) {
  const EllipticCurve& e = param.curve();
  CurvePoint r = param.r();
  CurvePoint q0r = ec_add(e, param.q0(), r);
  CurvePoint u = ec_neg(e, ec_add(e, p2, r));            // -P2 - R
  CurvePoint v = ec_neg(e, ec_add(e, p2, q0r));          // -P2 - Q0 - R
  lines::Line lu = lines::line_through(e, u, p2);
  lines::Line lv = lines::line_through(e, v, p2);
  std::vector<lines::Factor> nums = {lines::line_factor(e, lu, p1),
                                     lines::vertical_factor(e, q0r.x(), p1)};
  std::vector<lines::Factor> dens = {lines::line_factor(e, lv, p1),
                                     lines::vertical_factor(e, r.x(), p1)};
  return balanced_ratio(nums, dens);
}

// value at P of the normalized function with divisor D_R - D_{R'}
// (the compensating section change between two references)
inline std::optional<Rational> reference_change_raw(const DivisorClassParam& param,
                                                    const CurvePoint& new_r,
                                                    const CurvePoint& p) {
  const EllipticCurve& e = param.curve();
  if (p.is_infinity()) return Rational(1);
  CurvePoint r = param.r();
  CurvePoint diff = ec_sub(e, new_r, r);                              // R' - R
  CurvePoint nr = ec_neg(e, new_r);                                   // -R'
  CurvePoint nq0r = ec_neg(e, ec_add(e, param.q0(), new_r));          // -Q0 - R'
  if (diff.is_infinity()) return Rational(1);
  lines::Line l1 = lines::line_through(e, nr, diff);
  lines::Line l2 = lines::line_through(e, nq0r, diff);
  CurvePoint s1 = ec_add(e, nr, diff);    // -R
  CurvePoint s2 = ec_add(e, nq0r, diff);  // -Q0 - R
  // mu(-R', R'-R) / mu(-Q0-R', R'-R) with mu(S,T) = l_{S,T} / v_{S+T}
  std::vector<lines::Factor> nums = {lines::line_factor(e, l1, p),
                                     lines::vertical_factor(e, s2.x(), p)};
  std::vector<lines::Factor> dens = {lines::line_factor(e, l2, p),
                                     lines::vertical_factor(e, s1.x(), p)};
  return balanced_ratio(nums, dens);
}

}  // namespace detail_ext

// Value at P of the normalized function f with div f = D_R - D_{new_R},
// f(O) = 1; converts fiber coordinates between reference sections.
inline Rational reference_change_value(const DivisorClassParam& param, const CurvePoint& new_r_min,
                                       const CurvePoint& p_min) {
  DivisorClassParam::check_admissible(param.curve(), param.q0(), new_r_min);
  auto v = detail_ext::reference_change_raw(param, new_r_min, p_min);
  if (!v || *v == 0)
    throw collision_error("change_reference: evaluation point meets the moving divisor");
  return *v;
}

// The normalized square-isomorphism cocycle. Exact; symmetric; g(., O) = 1.
inline Rational cocycle_g(const ExtensionData& data, const CurvePoint& p1_given,
                          const CurvePoint& p2_given) {
  const DivisorClassParam& param = data.param;
  CurvePoint p1 = param.to_minimal_point(p1_given);
  CurvePoint p2 = param.to_minimal_point(p2_given);
  if (p1.is_infinity() || p2.is_infinity()) return data.debug_cocycle_scale * Rational(1);
  if (!data.base_admissible(p1))
    throw collision_error("cocycle_g: first argument meets the reference divisor");
  if (!data.base_admissible(p2))
    throw collision_error("cocycle_g: second argument meets the reference divisor");
  CurvePoint sum = ec_add(param.curve(), p1, p2);
  if (!data.base_admissible(sum))
    throw collision_error("cocycle_g: P1 + P2 meets the reference divisor");

  if (auto v = detail_ext::cocycle_raw(param, p1, p2); v && *v != 0)
    return data.debug_cocycle_scale * *v;
  if (auto v = detail_ext::cocycle_raw(param, p2, p1); v && *v != 0)
    return data.debug_cocycle_scale * *v;

  // translate the reference, evaluate there, convert back:
  // g_R(P1,P2) = g_{R'}(P1,P2) f(P1) f(P2) / f(P1+P2)
  for (const CurvePoint& cand :
       reference_candidates(param.curve(), param.q0(), 24)) {
    if (cand == param.r()) continue;
    try {
      DivisorClassParam alt = param.with_reference(cand);
      auto gv = detail_ext::cocycle_raw(alt, p1, p2);
      if (!gv || *gv == 0) continue;
      Rational f1 = reference_change_value(param, cand, p1);
      Rational f2 = reference_change_value(param, cand, p2);
      Rational fs = sum.is_infinity() ? Rational(1)
                                      : reference_change_value(param, cand, sum);
      // f here converts R-coordinates to cand-coordinates: t' = t f(P)
      return data.debug_cocycle_scale * (*gv * f1 * f2 / fs);
    } catch (const math_error&) {
    }
  }
  throw collision_error("cocycle_g: degenerate configuration for every candidate reference");
}

// --- group operations --------------------------------------------------------

inline ExtPoint ext_add(const ExtensionData& data, const ExtPoint& x1, const ExtPoint& x2) {
  const EllipticCurve& e = data.curve();
  CurvePoint sum = ec_add(e, x1.base, x2.base);
  if (!data.base_admissible(sum))
    throw collision_error("ext_add: resulting base meets the reference divisor");
  if (x1.base.is_infinity()) return ExtPoint{sum, x1.t * x2.t};
  if (x2.base.is_infinity()) return ExtPoint{sum, x1.t * x2.t};
  Rational g = cocycle_g(data, x1.base, x2.base);
  return ExtPoint{sum, x1.t * x2.t * g};
}

inline ExtPoint ext_neg(const ExtensionData& data, const ExtPoint& x) {
  if (x.base.is_infinity()) return ExtPoint{x.base, Rational(1) / x.t};
  CurvePoint nb = ec_neg(data.curve(), x.base);
  Rational g = cocycle_g(data, x.base, nb);
  return ExtPoint{nb, Rational(1) / (x.t * g)};
}

// theta-like multiplier: [n](P, t) = ([n]P, t^n g_n(P)); g_1 = 1 and
// g_{m+k}(P) = g_m(P) g_k(P) g([m]P, [k]P)
inline Rational ext_gn(const ExtensionData& data, long n, const CurvePoint& base_min) {
  if (n < 1) throw math_error("ext_gn: positive index required");
  if (base_min.is_infinity()) return Rational(1);
  const EllipticCurve& e = data.curve();
  // binary chain over pairs ([m]P, g_m)
  struct Entry {
    CurvePoint pt;
    Rational g;
  };
  Entry acc{CurvePoint::infinity(), Rational(1)};
  Entry pw{base_min, Rational(1)};
  long acc_n = 0, pw_n = 1;
  long k = n;
  while (k) {
    if (k & 1) {
      if (acc_n == 0) {
        acc = pw;
      } else {
        ExtensionData plain = data;
        plain.debug_cocycle_scale = Rational(1);
        Rational g = cocycle_g(plain, acc.pt, pw.pt);
        acc = Entry{ec_add(e, acc.pt, pw.pt), acc.g * pw.g * g};
      }
      acc_n += pw_n;
    }
    k >>= 1;
    if (k) {
      ExtensionData plain = data;
      plain.debug_cocycle_scale = Rational(1);
      Rational g = cocycle_g(plain, pw.pt, pw.pt);
      pw = Entry{ec_add(e, pw.pt, pw.pt), pw.g * pw.g * g};
      pw_n *= 2;
    }
  }
  return acc.g;
}

inline ExtPoint ext_mul_n(const ExtensionData& data, long n, const ExtPoint& x) {
  if (n == 0) return ext_neutral();
  if (n == 1) return x;
  if (n < 0) return ext_neg(data, ext_mul_n(data, -n, x));
  CurvePoint nb = ec_mul(data.curve(), n, x.base);
  if (!data.base_admissible(nb))
    throw collision_error("ext_mul_n: resulting base meets the reference divisor");
  Rational gn = ext_gn(data, n, x.base);
  return ExtPoint{nb, rational_pow(x.t, n) * gn};
}

// Re-expresses X against the reference section of new_r (given on the model
// the extension was constructed with). Heights are invariant under this.
inline ExtPoint change_reference(const ExtensionData& data, const CurvePoint& new_r_given,
                                 const ExtPoint& x) {
  CurvePoint new_r = data.param.to_minimal_point(new_r_given);
  if (new_r == data.param.r()) return x;
  if (x.base.is_infinity()) return x;
  Rational f = reference_change_value(data.param, new_r, x.base);
  return ExtPoint{x.base, x.t * f};
}

// --- automatic collision handling -------------------------------------------

template <typename T>
struct WithReference {
  T result;
  ExtensionData data;  // the (possibly translated) configuration the result lives in
  bool translated = false;
};

// runs op(data') over the reference candidates until one configuration admits
// every involved base point; inputs are converted with change_reference
inline WithReference<ExtPoint> ext_add_auto(const ExtensionData& data, const ExtPoint& x1,
                                            const ExtPoint& x2) {
  try {
    return {ext_add(data, x1, x2), data, false};
  } catch (const collision_error&) {
  }
  for (const CurvePoint& cand :
       reference_candidates(data.curve(), data.param.q0(), 24)) {
    if (cand == data.param.r()) continue;
    try {
      ExtensionData alt = data.with_reference(cand);
      ExtPoint y1 = ExtPoint{x1.base, x1.t * reference_change_value(data.param, cand, x1.base)};
      ExtPoint y2 = ExtPoint{x2.base, x2.t * reference_change_value(data.param, cand, x2.base)};
      if (x1.base.is_infinity()) y1 = x1;
      if (x2.base.is_infinity()) y2 = x2;
      return {ext_add(alt, y1, y2), alt, true};
    } catch (const math_error&) {
    }
  }
  throw collision_error("ext_add: no admissible reference translation");
}

// --- the split multi-factor variant ------------------------------------------

struct MultiFactor {
  ExtensionData data;
  Rational t;
};

struct MultiExtPoint {
  CurvePoint base;  // shared base point (minimal model coordinates)
  std::vector<Rational> ts;
};

inline MultiExtPoint multi_make(const std::vector<ExtensionData>& datas,
                                const CurvePoint& base_given, const std::vector<Rational>& ts) {
  if (datas.empty() || datas.size() != ts.size())
    throw math_error("multi_make: factor count mismatch");
  MultiExtPoint out{datas[0].param.to_minimal_point(base_given), ts};
  for (size_t i = 0; i < datas.size(); ++i) {
    if (ts[i] == 0) throw math_error("multi_make: zero fiber coordinate");
    if (!datas[i].base_admissible(out.base))
      throw collision_error("multi_make: base meets a factor reference divisor");
  }
  return out;
}

inline MultiExtPoint multi_ext_add(const std::vector<ExtensionData>& datas,
                                   const MultiExtPoint& x1, const MultiExtPoint& x2) {
  if (x1.ts.size() != datas.size() || x2.ts.size() != datas.size())
    throw math_error("multi_ext_add: factor count mismatch");
  CurvePoint sum = ec_add(datas[0].curve(), x1.base, x2.base);
  MultiExtPoint out{sum, {}};
  out.ts.reserve(datas.size());
  for (size_t i = 0; i < datas.size(); ++i) {
    ExtPoint a{x1.base, x1.ts[i]}, b{x2.base, x2.ts[i]};
    out.ts.push_back(ext_add(datas[i], a, b).t);
  }
  return out;
}

inline MultiExtPoint multi_ext_mul_n(const std::vector<ExtensionData>& datas, long n,
                                     const MultiExtPoint& x) {
  MultiExtPoint out{ec_mul(datas[0].curve(), n, x.base), {}};
  out.ts.reserve(datas.size());
  for (size_t i = 0; i < datas.size(); ++i)
    out.ts.push_back(ext_mul_n(datas[i], n, ExtPoint{x.base, x.ts[i]}).t);
  return out;
}

}  // namespace semiheight
