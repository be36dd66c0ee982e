#pragma once

// Reference corpus: three curve/extension configurations exercising good and
// bad reduction, torsion and non-torsion extension parameters.

#include <semiheight/elliptic_curve.hpp>

#include <vector>

namespace semiheight::testsupport {

struct Config {
  const char* name;
  EllipticCurve curve;
  CurvePoint q0;
  CurvePoint gen;  // a non-torsion point generating test samples
};

inline CurvePoint cpt(long x, long y) {
  return CurvePoint::affine(Rational(x), Rational(y));
}

inline std::vector<Config> corpus() {
  // y^2 + y = x^3 - x, disc 37, Q0 = (1,0) = [2](0,0) non-torsion
  EllipticCurve c37(Int(0), Int(0), Int(1), Int(-1), Int(0));
  // y^2 = x^3 - 25x, disc 10^6, Q0 = (0,0) exact 2-torsion
  EllipticCurve c50(Int(0), Int(0), Int(0), Int(-25), Int(0));
  // y^2 + y = x^3 + x^2 - 2x, disc 389, rank 2
  EllipticCurve c389(Int(0), Int(1), Int(1), Int(-2), Int(0));
  return {
      {"37a1-Q0=(1,0)", c37, cpt(1, 0), cpt(0, 0)},
      {"50-torsionQ0", c50, cpt(0, 0), cpt(-4, 6)},
      {"389a1-Q0=(0,0)", c389, cpt(0, 0), cpt(1, 0)},
  };
}

}  // namespace semiheight::testsupport
