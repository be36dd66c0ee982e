#pragma once

// Certified real arithmetic: an MPFR center plus a conservative absolute
// error bound. Every operation inflates the bound by its own rounding error
// and by first-order propagation of the input bounds, so the invariant
// "true value lies in [value - abs_error, value + abs_error]" is preserved.
//
// Error bounds live in doubles; all quantities the library carries through
// RealValue (logs, heights, norms) have magnitude far below the double
// exponent range. A bound that degenerates to infinity marks the ball as
// uncertified and callers re-run at higher precision.

#include "semiheight/rational.hpp"

#include <mpfr.h>

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace semiheight {

namespace errd {
// Upward-biased double helpers for error bookkeeping.
inline double up(double x) {
  if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
  return std::nextafter(x, std::numeric_limits<double>::infinity());
}
inline double add(double a, double b) { return up(a + b); }
inline double mul(double a, double b) { return up(a * b); }
}  // namespace errd

class RealValue {
 public:
  RealValue() : err_(0) { mpfr_init2(v_, 64); mpfr_set_zero(v_, 1); }

  explicit RealValue(mpfr_prec_t prec) : err_(0) {
    mpfr_init2(v_, prec);
    mpfr_set_zero(v_, 1);
  }

  RealValue(const RealValue& o) : err_(o.err_) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  RealValue(RealValue&& o) noexcept : err_(o.err_) {
    mpfr_init2(v_, 64);
    mpfr_swap(v_, o.v_);
  }
  RealValue& operator=(const RealValue& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
      err_ = o.err_;
    }
    return *this;
  }
  RealValue& operator=(RealValue&& o) noexcept {
    mpfr_swap(v_, o.v_);
    err_ = o.err_;
    return *this;
  }
  ~RealValue() { mpfr_clear(v_); }

  static RealValue exact_zero() { return RealValue(); }

  static RealValue of_rational(const Rational& q, mpfr_prec_t prec) {
    RealValue r(prec);
    mpfr_set_q(r.v_, q.get_mpq_t(), MPFR_RNDN);
    r.err_ = r.round_ulp();
    return r;
  }

  static RealValue of_int(const Int& n, mpfr_prec_t prec) {
    RealValue r(prec);
    mpfr_set_z(r.v_, n.get_mpz_t(), MPFR_RNDN);
    r.err_ = r.round_ulp();
    return r;
  }

  static RealValue of_double(double d, mpfr_prec_t prec) {
    RealValue r(prec);
    mpfr_set_d(r.v_, d, MPFR_RNDN);
    r.err_ = 0;  // doubles are exact binary values
    return r;
  }

  // log q for exact rational q > 0.
  static RealValue log_of_rational(const Rational& q, mpfr_prec_t prec) {
    if (q <= 0) throw math_error("log_of_rational: nonpositive input");
    RealValue r(prec);
    mpfr_t t;
    mpfr_init2(t, prec + 32);
    mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDN);
    mpfr_log(r.v_, t, MPFR_RNDN);
    mpfr_clear(t);
    // relative error of the two roundings: ~2^{-prec-32} through log plus final ulp
    double m = r.mag_upper();
    r.err_ = errd::add(errd::mul(m + 1.0, std::ldexp(1.0, -static_cast<int>(prec) - 28)),
                       r.round_ulp());
    return r;
  }

  static RealValue log_of_int(const Int& n, mpfr_prec_t prec) {
    return log_of_rational(Rational(n), prec);
  }

  mpfr_prec_t prec() const { return mpfr_get_prec(v_); }
  double error() const { return err_; }
  bool certified(double bound) const { return std::isfinite(err_) && err_ <= bound; }

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  const mpfr_t& raw() const { return v_; }

  bool exactly_zero() const { return mpfr_zero_p(v_) && err_ == 0; }

  RealValue operator-() const {
    RealValue r(*this);
    mpfr_neg(r.v_, r.v_, MPFR_RNDN);
    return r;
  }

  RealValue abs() const {
    RealValue r(*this);
    mpfr_abs(r.v_, r.v_, MPFR_RNDN);
    return r;
  }

  friend RealValue operator+(const RealValue& a, const RealValue& b) {
    RealValue r(std::max(a.prec(), b.prec()));
    mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
    r.err_ = errd::add(errd::add(a.err_, b.err_), r.round_ulp());
    return r;
  }
  friend RealValue operator-(const RealValue& a, const RealValue& b) {
    RealValue r(std::max(a.prec(), b.prec()));
    mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
    r.err_ = errd::add(errd::add(a.err_, b.err_), r.round_ulp());
    return r;
  }
  friend RealValue operator*(const RealValue& a, const RealValue& b) {
    RealValue r(std::max(a.prec(), b.prec()));
    mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
    double e = errd::add(errd::mul(a.mag_upper(), b.err_), errd::mul(b.mag_upper(), a.err_));
    e = errd::add(e, errd::mul(a.err_, b.err_));
    r.err_ = errd::add(e, r.round_ulp());
    return r;
  }
  friend RealValue operator/(const RealValue& a, const RealValue& b) {
    RealValue r(std::max(a.prec(), b.prec()));
    mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
    double blo = b.mag_lower();
    if (!(blo > 0)) {
      r.err_ = std::numeric_limits<double>::infinity();
      return r;
    }
    double e = errd::add(a.err_, errd::mul(r.mag_upper(), b.err_));
    r.err_ = errd::add(errd::up(e / blo), r.round_ulp());
    return r;
  }

  RealValue& operator+=(const RealValue& o) { return *this = *this + o; }
  RealValue& operator-=(const RealValue& o) { return *this = *this - o; }
  RealValue& operator*=(const RealValue& o) { return *this = *this * o; }

  friend RealValue operator*(const RealValue& a, const Rational& q) {
    return a * RealValue::of_rational(q, a.prec());
  }

  // exact scaling by 2^e
  RealValue mul_2si(long e) const {
    RealValue r(*this);
    mpfr_mul_2si(r.v_, r.v_, e, MPFR_RNDN);
    r.err_ = errd::mul(err_, std::ldexp(1.0, static_cast<int>(e)));
    return r;
  }

  RealValue log() const {
    RealValue r(prec());
    double lo = mag_lower_signed();
    if (!(lo > 0)) {
      mpfr_set_nan(r.v_);
      r.err_ = std::numeric_limits<double>::infinity();
      return r;
    }
    mpfr_log(r.v_, v_, MPFR_RNDN);
    r.err_ = errd::add(errd::up(err_ / lo), r.round_ulp());
    return r;
  }

  RealValue exp() const {
    RealValue r(prec());
    mpfr_exp(r.v_, v_, MPFR_RNDN);
    // |e^{x+d} - e^x| <= e^x (e^d - 1) <= e^x d e^d
    double m = r.mag_upper();
    double grow = err_ < 1e-3 ? errd::mul(err_, 1.01) : std::expm1(errd::up(err_));
    r.err_ = errd::add(errd::mul(m, grow), r.round_ulp());
    return r;
  }

  RealValue sin() const {
    RealValue r(prec());
    mpfr_sin(r.v_, v_, MPFR_RNDN);
    r.err_ = errd::add(err_, r.round_ulp());  // |sin| is 1-Lipschitz
    return r;
  }

  static RealValue pi(mpfr_prec_t prec) {
    RealValue r(prec);
    mpfr_const_pi(r.v_, MPFR_RNDN);
    r.err_ = r.round_ulp();
    return r;
  }

  // log max(1, x); requires x > -err (treated through interval endpoints)
  RealValue log_plus() const {
    RealValue hi = interval_hi(), lo = interval_lo();
    auto lp = [](RealValue& z) {
      if (mpfr_cmp_ui(z.v_, 1) <= 0)
        mpfr_set_zero(z.v_, 1);
      else
        mpfr_log(z.v_, z.v_, MPFR_RNDN);
    };
    lp(hi);
    lp(lo);
    return from_endpoints(lo, hi);
  }

  // max(0, x) on interval semantics
  RealValue max0() const {
    RealValue hi = interval_hi(), lo = interval_lo();
    if (mpfr_sgn(hi.v_) < 0) mpfr_set_zero(hi.v_, 1);
    if (mpfr_sgn(lo.v_) < 0) mpfr_set_zero(lo.v_, 1);
    return from_endpoints(lo, hi);
  }

  // interval max of |a| and |b|
  static RealValue max_abs(const RealValue& a, const RealValue& b) {
    RealValue ahi = a.abs_hi(), alo = a.abs_lo(), bhi = b.abs_hi(), blo = b.abs_lo();
    RealValue hi(std::max(a.prec(), b.prec())), lo(std::max(a.prec(), b.prec()));
    mpfr_max(hi.raw_mut(), ahi.v_, bhi.v_, MPFR_RNDN);
    mpfr_max(lo.raw_mut(), alo.v_, blo.v_, MPFR_RNDN);
    return from_endpoints(lo, hi);
  }

  static RealValue max(const RealValue& a, const RealValue& b) {
    RealValue hi(std::max(a.prec(), b.prec())), lo(std::max(a.prec(), b.prec()));
    RealValue ah = a.interval_hi(), al = a.interval_lo();
    RealValue bh = b.interval_hi(), bl = b.interval_lo();
    mpfr_max(hi.raw_mut(), ah.v_, bh.v_, MPFR_RNDN);
    mpfr_max(lo.raw_mut(), al.v_, bl.v_, MPFR_RNDN);
    return from_endpoints(lo, hi);
  }

  RealValue sqrt() const {
    RealValue r(prec());
    double lo = mag_lower_signed();
    mpfr_sqrt(r.v_, v_, MPFR_RNDN);
    if (!(lo > 0)) {
      if (mpfr_zero_p(v_) && err_ == 0) return RealValue(prec());
      r.err_ = std::numeric_limits<double>::infinity();
      return r;
    }
    r.err_ = errd::add(errd::up(err_ / (2 * std::sqrt(lo) * 0.999)), r.round_ulp());
    return r;
  }

  // certified comparisons
  bool definitely_positive() const { return mag_lower_signed() > 0; }
  bool definitely_negative() const { return (-*this).definitely_positive(); }
  bool definitely_less(const RealValue& o) const { return (o - *this).definitely_positive(); }
  bool contains_zero() const { return !(definitely_positive() || definitely_negative()); }

  // |center - q| <= err ?
  bool contains(const Rational& q) const {
    RealValue d = *this - of_rational(q, prec());
    return !d.definitely_positive() && !d.definitely_negative();
  }

  // same center, error bound inflated by extra
  RealValue widened(double extra) const {
    RealValue r(*this);
    r.err_ = errd::add(r.err_, extra);
    return r;
  }

  // certified |a - b| <= tol: the whole difference interval fits in [-tol, tol]
  bool close_to(const RealValue& o, double tol) const {
    RealValue d = (*this - o).abs();
    if (!std::isfinite(d.err_)) return false;
    double hi = errd::add(std::fabs(d.to_double()) * (1 + 1e-12), d.err_);
    return hi <= tol;
  }

  std::string str(int digits = 20) const {
    char* s = nullptr;
    mpfr_asprintf(&s, "%.*Rg", digits, v_);
    std::string out(s);
    mpfr_free_str(s);
    return out;
  }
  std::string str_with_error(int digits = 20) const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", err_);
    return str(digits) + " +/- " + buf;
  }

  // upper bound for |value| including error
  double mag_upper() const {
    double m = std::fabs(mpfr_get_d(v_, MPFR_RNDA));
    return errd::add(errd::mul(m, 1 + 1e-12), err_);
  }

 private:
  // lower bound for |value| given sign is positive: value - err
  double mag_lower_signed() const {
    double m = mpfr_get_d(v_, MPFR_RNDZ);
    return (m - err_) * (1 - 1e-12) - 1e-300;
  }
  double mag_lower() const {
    double m = std::fabs(mpfr_get_d(v_, MPFR_RNDZ));
    return (m - err_) * (1 - 1e-12) - 1e-300;
  }

  double round_ulp() const {
    if (mpfr_zero_p(v_) || !mpfr_number_p(v_)) return mpfr_number_p(v_) ? 0.0 : INFINITY;
    mpfr_exp_t e = mpfr_get_exp(v_);
    long k = static_cast<long>(e) - static_cast<long>(prec());
    if (k < -1060) return 1e-300;
    if (k > 1020) return std::numeric_limits<double>::infinity();
    return std::ldexp(1.0, static_cast<int>(k + 1));
  }

  RealValue interval_hi() const {
    RealValue r(*this);
    mpfr_t e;
    mpfr_init2(e, 64);
    mpfr_set_d(e, err_, MPFR_RNDU);
    mpfr_add(r.v_, r.v_, e, MPFR_RNDU);
    mpfr_clear(e);
    r.err_ = 0;
    return r;
  }
  RealValue interval_lo() const {
    RealValue r(*this);
    mpfr_t e;
    mpfr_init2(e, 64);
    mpfr_set_d(e, err_, MPFR_RNDU);
    mpfr_sub(r.v_, r.v_, e, MPFR_RNDD);
    mpfr_clear(e);
    r.err_ = 0;
    return r;
  }
  RealValue abs_hi() const {
    RealValue h = interval_hi(), l = interval_lo(), r(prec());
    mpfr_abs(h.v_, h.v_, MPFR_RNDU);
    mpfr_abs(l.v_, l.v_, MPFR_RNDU);
    mpfr_max(r.v_, h.v_, l.v_, MPFR_RNDU);
    r.err_ = 0;
    return r;
  }
  RealValue abs_lo() const {
    RealValue h = interval_hi(), l = interval_lo(), r(prec());
    if (mpfr_sgn(h.v_) >= 0 && mpfr_sgn(l.v_) <= 0) {
      mpfr_set_zero(r.v_, 1);
    } else {
      mpfr_abs(h.v_, h.v_, MPFR_RNDD);
      mpfr_abs(l.v_, l.v_, MPFR_RNDD);
      mpfr_min(r.v_, h.v_, l.v_, MPFR_RNDD);
    }
    r.err_ = 0;
    return r;
  }

  static RealValue from_endpoints(const RealValue& lo, const RealValue& hi) {
    RealValue r(std::max(lo.prec(), hi.prec()));
    mpfr_add(r.v_, lo.v_, hi.v_, MPFR_RNDN);
    mpfr_div_2ui(r.v_, r.v_, 1, MPFR_RNDN);
    mpfr_t w;
    mpfr_init2(w, 64);
    mpfr_sub(w, hi.v_, lo.v_, MPFR_RNDU);
    double width = mpfr_get_d(w, MPFR_RNDU);
    mpfr_clear(w);
    r.err_ = errd::add(errd::up(width / 2 * (1 + 1e-12)), r.round_ulp());
    return r;
  }

  mpfr_ptr raw_mut() { return v_; }

  mpfr_t v_;
  double err_;
};

// Polynomial evaluation with exact Int coefficients (Horner), ball result.
inline RealValue horner_eval(const std::vector<Int>& coeffs_high_to_low, const RealValue& x) {
  RealValue acc = RealValue::of_int(coeffs_high_to_low.empty() ? Int(0) : coeffs_high_to_low[0],
                                    x.prec());
  for (size_t i = 1; i < coeffs_high_to_low.size(); ++i)
    acc = acc * x + RealValue::of_int(coeffs_high_to_low[i], x.prec());
  return acc;
}

}  // namespace semiheight
