#pragma once

// Exact integer and rational arithmetic on top of GMP, plus the small
// amount of multiplicative number theory the rest of the library needs:
// p-adic valuations, primality, and factorization of moderate integers.

#include <gmpxx.h>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace semiheight {

using Int = mpz_class;
using Rational = mpq_class;

struct math_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Rational make_rational(const Int& num, const Int& den) {
  if (den == 0) throw math_error("make_rational: zero denominator");
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline const Int& num(const Rational& q) { return q.get_num(); }
inline const Int& den(const Rational& q) { return q.get_den(); }

inline Int int_pow(Int base, unsigned long e) {
  Int r;
  mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
  return r;
}

// p^e for integer e (negative exponents give 1/p^e).
inline Rational rational_pow(const Int& base, long e) {
  if (e >= 0) return Rational(int_pow(base, static_cast<unsigned long>(e)));
  return make_rational(1, int_pow(base, static_cast<unsigned long>(-e)));
}

inline Rational rational_pow(const Rational& base, long e) {
  if (base == 0 && e <= 0) throw math_error("rational_pow: 0 to nonpositive power");
  Rational r(1);
  Rational b = e >= 0 ? base : Rational(1) / base;
  unsigned long k = static_cast<unsigned long>(e >= 0 ? e : -e);
  while (k) {
    if (k & 1) r *= b;
    b *= b;
    k >>= 1;
  }
  return r;
}

inline bool is_prime(const Int& n) {
  if (n < 2) return false;
  return mpz_probab_prime_p(n.get_mpz_t(), 40) != 0;
}

// v_p(n) for n != 0; strips the power of p as a side product.
inline long remove_power(Int& n, const Int& p) {
  Int out;
  unsigned long v = mpz_remove(out.get_mpz_t(), n.get_mpz_t(), p.get_mpz_t());
  n = out;
  return static_cast<long>(v);
}

inline long valuation(const Int& n, const Int& p) {
  if (n == 0) throw math_error("valuation: undefined at 0");
  if (!is_prime(p)) throw math_error("valuation: modulus " + p.get_str() + " is not prime");
  Int tmp = n;
  return remove_power(tmp, p);
}

inline long valuation(const Rational& q, const Int& p) {
  if (q == 0) throw math_error("valuation: undefined at 0");
  if (!is_prime(p)) throw math_error("valuation: modulus " + p.get_str() + " is not prime");
  Int n = num(q), d = den(q);
  long vn = remove_power(n, p);
  if (vn > 0) return vn;  // num and den are coprime
  Int dd = d;
  return -remove_power(dd, p);
}

// large positive sentinel standing in for v_p(0) = +infinity
inline constexpr long kValuationInfinity = 1000000000L;

inline long valuation_sat(const Rational& q, const Int& p) {
  if (q == 0) return kValuationInfinity;
  return valuation(q, p);
}

namespace detail {

inline Int pollard_rho(const Int& n, unsigned long seed) {
  // Brent's cycle variant; n odd composite, not a prime power of small prime.
  gmp_randclass rng(gmp_randinit_default);
  rng.seed(seed);
  while (true) {
    Int y = rng.get_z_range(n - 3) + 2;
    Int c = rng.get_z_range(n - 2) + 1;
    Int x = y, d(1), q(1), ys(0);
    unsigned long r = 1, m = 128;
    auto f = [&](const Int& v) { return Int((v * v + c) % n); };
    while (d == 1) {
      x = y;
      for (unsigned long i = 0; i < r; ++i) y = f(y);
      unsigned long k = 0;
      while (k < r && d == 1) {
        ys = y;
        unsigned long lim = std::min(m, r - k);
        for (unsigned long i = 0; i < lim; ++i) {
          y = f(y);
          q = q * abs(x - y) % n;
        }
        d = gcd(q, n);
        k += m;
      }
      r <<= 1;
      if (r > (1ul << 24)) break;  // bail out, caller retries with new seed
    }
    if (d == n) {
      // backtrack
      d = 1;
      while (d == 1) {
        ys = f(ys);
        d = gcd(Int(abs(x - ys)), n);
      }
    }
    if (d != n && d != 1) return d;
    seed += 1;
  }
}

inline void factor_into(Int n, std::map<Int, long>& out, int depth = 0) {
  if (n == 1) return;
  if (depth > 64) throw math_error("factor: recursion depth exceeded");
  if (is_prime(n)) {
    out[n] += 1;
    return;
  }
  Int d = pollard_rho(n, 0xC0FFEEul + static_cast<unsigned long>(depth));
  factor_into(d, out, depth + 1);
  factor_into(n / d, out, depth + 1);
}

}  // namespace detail

// Prime factorization of |n|, n != 0. Intended for curve discriminants,
// coordinate denominators and similar height-sized data, not cryptographic
// inputs; refuses implausibly large factoring jobs instead of hanging.
inline std::map<Int, long> factor(const Int& n_in) {
  if (n_in == 0) throw math_error("factor: zero");
  Int n = abs(n_in);
  std::map<Int, long> out;
  if (n == 1) return out;
  static const long small_primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43,
                                      47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101};
  for (long sp : small_primes) {
    Int p(sp);
    long v = remove_power(n, p);
    if (v > 0) out[p] = v;
    if (n == 1) return out;
  }
  // trial division up to 10^5
  for (Int p(103); p < 100000 && n > 1; mpz_nextprime(p.get_mpz_t(), p.get_mpz_t())) {
    if (n % p == 0) out[p] = remove_power(n, p);
  }
  if (n == 1) return out;
  if (mpz_sizeinbase(n.get_mpz_t(), 10) > 80)
    throw math_error("factor: cofactor too large (" +
                     std::to_string(mpz_sizeinbase(n.get_mpz_t(), 10)) + " digits)");
  detail::factor_into(n, out);
  return out;
}

// Union of the prime supports of a list of nonzero integers.
inline std::vector<Int> prime_support(const std::vector<Int>& values) {
  std::map<Int, long> acc;
  for (const Int& v : values) {
    if (v == 0 || v == 1 || v == -1) continue;
    for (auto& [p, e] : factor(v)) acc[p] += e;
  }
  std::vector<Int> out;
  out.reserve(acc.size());
  for (auto& [p, e] : acc) out.push_back(p);
  return out;
}

// Strips from n every prime factor it shares with basis.
inline Int strip_primes(Int n, const std::vector<Int>& basis) {
  for (const Int& p : basis) {
    if (n == 0) break;
    remove_power(n, p);
  }
  return n;
}

inline std::string to_string(const Rational& q) {
  if (den(q) == 1) return num(q).get_str();
  return num(q).get_str() + "/" + den(q).get_str();
}

inline Rational parse_rational(const std::string& s) {
  Rational q;
  if (mpq_set_str(q.get_mpq_t(), s.c_str(), 10) != 0)
    throw math_error("parse_rational: bad literal '" + s + "'");
  if (den(q) == 0) throw math_error("parse_rational: zero denominator in '" + s + "'");
  q.canonicalize();
  return q;
}

}  // namespace semiheight
