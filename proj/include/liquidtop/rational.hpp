#pragma once

#include <gmpxx.h>

#include <string>

namespace liquidtop {

/// Exact arbitrary-precision rational used for all symbolic integrals.
using Rational = mpq_class;

inline double to_double(const Rational& q) { return q.get_d(); }

/// Canonical "num/den" encoding ("num" alone when den == 1).
inline std::string rational_to_string(const Rational& q) {
    if (q.get_den() == 1) return q.get_num().get_str();
    return q.get_num().get_str() + "/" + q.get_den().get_str();
}

inline Rational rational_from_string(const std::string& s) {
    Rational q(s);
    q.canonicalize();
    return q;
}

/// Exact value of a double (every finite double is a dyadic rational).
inline Rational rational_of(double x) { return Rational(x); }

inline Rational rational_pow(const Rational& q, unsigned n) {
    Rational r(1), base(q);
    while (n) {
        if (n & 1u) r *= base;
        base *= base;
        n >>= 1u;
    }
    return r;
}

}  // namespace liquidtop
