#pragma once

// Shared job configuration: working precision, tolerances, oracle depth and
// the reference-point search policy.

#include "semiheight/rational.hpp"

#include <cmath>
#include <cstdlib>
#include <mpfr.h>

namespace semiheight {

struct JobConfig {
  int precision_digits = 40;
  double tolerance = 1e-10;
  int oracle_n = 2;
  int oracle_k_max = 12;
  double oracle_budget_seconds = 300.0;
  int lift_multiple_bound = 12;
  int reference_candidates = 24;  // size of the deterministic auto-R list

  mpfr_prec_t prec_bits() const {
    return static_cast<mpfr_prec_t>(std::ceil(precision_digits * 3.33)) + 32;
  }
  // target absolute error for a single archimedean evaluation
  double arch_target() const { return std::pow(10.0, -precision_digits + 4); }

  void validate() const {
    if (precision_digits < 2 * -std::log10(tolerance))
      throw math_error("JobConfig: precision_digits must be at least 2*(-log10 tolerance)");
    if (oracle_n < 2) throw math_error("JobConfig: oracle base must be >= 2");
  }

  static JobConfig from_env() {
    JobConfig cfg;
    if (const char* s = std::getenv("SEMIHEIGHT_PRECISION")) {
      int d = std::atoi(s);
      if (d > 0) cfg.precision_digits = d;
    }
    return cfg;
  }
};

}  // namespace semiheight
