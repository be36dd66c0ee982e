#pragma once

// Local values of height computations: exact rational multiples of log p at
// finite places, certified balls at the archimedean place. Finite-place data
// stays exact until a caller explicitly collapses it to a RealValue.

#include "semiheight/place.hpp"
#include "semiheight/rational.hpp"
#include "semiheight/real_value.hpp"

#include <optional>
#include <vector>

namespace semiheight {

class LocalHeightValue {
 public:
  static LocalHeightValue finite(const Place& v, const Rational& coeff) {
    if (!v.is_finite()) throw math_error("LocalHeightValue::finite: archimedean place");
    LocalHeightValue x;
    x.place_ = v;
    x.coeff_ = coeff;
    return x;
  }
  static LocalHeightValue archimedean(RealValue r) {
    LocalHeightValue x;
    x.place_ = Place::archimedean();
    x.real_ = std::move(r);
    return x;
  }

  const Place& place() const { return place_; }
  bool exact() const { return place_.is_finite(); }

  // coefficient c with value = c * log p
  const Rational& coeff() const {
    if (!exact()) throw math_error("LocalHeightValue: no exact coefficient at archimedean place");
    return coeff_;
  }
  const RealValue& real() const {
    if (exact()) throw math_error("LocalHeightValue: finite place carries exact data");
    return *real_;
  }

  bool is_zero() const { return exact() ? coeff_ == 0 : real_->exactly_zero(); }

  // one-way numeric collapse
  RealValue collapse(mpfr_prec_t prec) const {
    if (!exact()) return *real_;
    if (coeff_ == 0) return RealValue::exact_zero();
    return RealValue::log_of_int(place_.prime(), prec) * coeff_;
  }

  LocalHeightValue operator+(const LocalHeightValue& o) const {
    require_same_place(o);
    if (exact()) return finite(place_, coeff_ + o.coeff_);
    return archimedean(*real_ + *o.real_);
  }
  LocalHeightValue operator-(const LocalHeightValue& o) const {
    require_same_place(o);
    if (exact()) return finite(place_, coeff_ - o.coeff_);
    return archimedean(*real_ - *o.real_);
  }
  LocalHeightValue operator-() const {
    if (exact()) return finite(place_, -coeff_);
    return archimedean(-*real_);
  }
  LocalHeightValue scale(const Rational& s, mpfr_prec_t prec) const {
    if (exact()) return finite(place_, coeff_ * s);
    return archimedean(*real_ * RealValue::of_rational(s, prec));
  }

  std::string str() const {
    if (exact()) return to_string(coeff_) + "*log(" + place_.prime().get_str() + ")";
    return real_->str();
  }

 private:
  LocalHeightValue() : place_(Place::archimedean()) {}
  void require_same_place(const LocalHeightValue& o) const {
    if (!(place_ == o.place_)) throw math_error("LocalHeightValue: place mismatch");
  }
  Place place_;
  Rational coeff_;
  std::optional<RealValue> real_;
};

// log |x|_v, normalized so the product formula holds with unit weights:
// |p|_p = 1/p and |.|_inf the usual absolute value.
inline LocalHeightValue log_abs_v(const Rational& x, const Place& v, mpfr_prec_t prec = 128) {
  if (x == 0) throw math_error("log_abs_v: zero input");
  if (v.is_finite())
    return LocalHeightValue::finite(v, Rational(-valuation(x, v.prime())));
  Rational a = x < 0 ? Rational(-x) : x;
  if (a == 1) return LocalHeightValue::archimedean(RealValue::exact_zero());
  return LocalHeightValue::archimedean(RealValue::log_of_rational(a, prec));
}

// log max(1, x) for x >= 0
inline RealValue log_plus(const Rational& x, mpfr_prec_t prec = 128) {
  if (x < 0) throw math_error("log_plus: negative input");
  if (x <= 1) return RealValue::exact_zero();
  return RealValue::log_of_rational(x, prec);
}

inline RealValue log_plus(const RealValue& x) {
  if (x.definitely_negative()) throw math_error("log_plus: negative input");
  return x.log_plus();
}

// positive part on the log scale: the input carries log of a nonnegative
// quantity, the output is log max(1, .) of that quantity
inline LocalHeightValue log_plus(const LocalHeightValue& lv) {
  if (lv.exact()) {
    Rational c = lv.coeff();
    return LocalHeightValue::finite(lv.place(), c > 0 ? c : Rational(0));
  }
  return LocalHeightValue::archimedean(lv.real().max0());
}

// Symbolic certificate that sum_v log|x|_v = 0: the finite places contribute
// -v_p(x) log p, the archimedean factorization contributes +v_p(x) log p, and
// the cancellation is verified coefficient by coefficient.
struct ProductFormulaWitness {
  struct Row {
    Int p;
    Rational finite_coeff;  // from log|x|_p
    Rational arch_coeff;    // from the factorization of |x|
  };
  std::vector<Row> rows;
  bool exactly_zero = false;
};

inline ProductFormulaWitness product_formula_sum(const Rational& x) {
  if (x == 0) throw math_error("product_formula_sum: zero input");
  ProductFormulaWitness w;
  std::map<Int, long> exps;
  for (auto& [p, e] : factor(num(x))) exps[p] += e;
  for (auto& [p, e] : factor(den(x))) exps[p] -= e;
  w.exactly_zero = true;
  for (auto& [p, e] : exps) {
    ProductFormulaWitness::Row row{p, Rational(-e), Rational(e)};
    if (row.finite_coeff + row.arch_coeff != 0) w.exactly_zero = false;
    w.rows.push_back(row);
  }
  return w;
}

}  // namespace semiheight
