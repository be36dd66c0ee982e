#pragma once

// Places of Q: the finite primes and the single archimedean place.

#include "semiheight/rational.hpp"

#include <compare>
#include <string>

namespace semiheight {

class Place {
 public:
  static Place finite(const Int& p) {
    if (!is_prime(p)) throw math_error("Place: " + p.get_str() + " is not prime");
    return Place(p);
  }
  static Place archimedean() { return Place(); }

  bool is_finite() const { return finite_; }
  bool is_archimedean() const { return !finite_; }
  const Int& prime() const {
    if (!finite_) throw math_error("Place: archimedean place has no prime");
    return p_;
  }

  bool operator==(const Place& o) const {
    return finite_ == o.finite_ && (!finite_ || p_ == o.p_);
  }
  bool operator!=(const Place& o) const { return !(*this == o); }
  // Canonical order: finite primes ascending, archimedean last.
  bool operator<(const Place& o) const {
    if (finite_ != o.finite_) return finite_;
    if (!finite_) return false;
    return p_ < o.p_;
  }

  std::string str() const { return finite_ ? p_.get_str() : "inf"; }

 private:
  Place() : finite_(false), p_(0) {}
  explicit Place(const Int& p) : finite_(true), p_(p) {}
  bool finite_;
  Int p_;
};

}  // namespace semiheight
