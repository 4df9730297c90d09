#pragma once

#include <gmpxx.h>

#include <Eigen/Core>

#include <stdexcept>
#include <string>

#include "qnd/kernel.hpp"

// Exact rational scalar for the enumeration oracle, backed by GMP's
// mpq_class. Include this header before instantiating the kernel templates
// with Rational.

namespace Eigen {

template <>
struct NumTraits<mpq_class> : GenericNumTraits<mpq_class> {
  typedef mpq_class Real;
  typedef mpq_class NonInteger;
  typedef mpq_class Nested;

  static inline Real epsilon() { return 0; }
  static inline Real dummy_precision() { return 0; }
  static inline int digits10() { return 0; }

  enum {
    IsInteger = 0,
    IsSigned = 1,
    IsComplex = 0,
    RequireInitialization = 1,
    ReadCost = 6,
    AddCost = 150,
    MulCost = 100
  };
};

}  // namespace Eigen

namespace qnd {

using Rational = mpq_class;
using RationalKernel = KernelT<Rational>;

template <>
struct ScalarTraits<Rational> {
  static constexpr bool is_exact = true;
  static double to_double(const Rational& x) { return x.get_d(); }
};

// Accepts "3/4", "-1/3", "7". Doubles are converted elsewhere via the exact
// binary expansion (Rational(double)).
inline Rational parse_rational(const std::string& text) {
  Rational r;
  if (r.set_str(text, 10) != 0)
    throw ParseError("cannot parse rational literal '" + text + "'");
  if (r.get_den() == 0) throw ParseError("rational literal with zero denominator: '" + text + "'");
  r.canonicalize();
  return r;
}

}  // namespace qnd
