#pragma once

#include "liquidtop/rational.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace liquidtop {

/// Packed exponent triple: x | y<<8 | z<<16.  Exponents stay well below 255.
using MonoKey = std::uint32_t;

constexpr MonoKey mono_key(unsigned ex, unsigned ey, unsigned ez) {
    return static_cast<MonoKey>(ex) | (static_cast<MonoKey>(ey) << 8) |
           (static_cast<MonoKey>(ez) << 16);
}
constexpr unsigned mono_exp(MonoKey k, int axis) { return (k >> (8 * axis)) & 0xffu; }

/// Parity signature of a monomial: low bit of each exponent byte.
constexpr MonoKey mono_parity(MonoKey k) { return k & 0x010101u; }

/// Sparse trivariate polynomial with exact rational coefficients.
/// Canonical form: terms sorted by key, no zero coefficients stored.
class Polynomial3 {
public:
    struct Term {
        MonoKey key;
        Rational coeff;
    };

    Polynomial3() = default;

    static Polynomial3 constant(const Rational& c);
    static Polynomial3 monomial(unsigned ex, unsigned ey, unsigned ez, const Rational& c);

    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }
    const std::vector<Term>& terms() const { return terms_; }

    int total_degree() const;          // -1 for the zero polynomial
    int degree_in(int axis) const;     // -1 for the zero polynomial

    Polynomial3 operator+(const Polynomial3& o) const;
    Polynomial3 operator-(const Polynomial3& o) const;
    Polynomial3 operator*(const Polynomial3& o) const;
    Polynomial3 scaled(const Rational& s) const;
    Polynomial3 derivative(int axis) const;

    Rational eval(const Rational& x, const Rational& y, const Rational& z) const;
    double eval(double x, double y, double z) const;

    /// Builds canonical form from an unsorted term list (sums duplicates).
    static Polynomial3 from_terms(std::vector<Term> raw);

private:
    std::vector<Term> terms_;
};

/// Divergence-free velocity field with polynomial components.
struct VectorField {
    std::array<Polynomial3, 3> comp;

    Polynomial3 divergence() const;
    bool is_zero() const { return comp[0].is_zero() && comp[1].is_zero() && comp[2].is_zero(); }
};

/// Exact integral over the cube [-h,h]^3.
Rational integrate_cube(const Polynomial3& p, const Rational& h);

/// Exact integral of p*q over [-h,h]^3 without forming the product, using
/// parity bucketing (a monomial integrates to zero unless all exponents are
/// even, so only like-parity term pairs contribute).
Rational integral_of_product(const Polynomial3& p, const Polynomial3& q, const Rational& h);

/// Table of one-dimensional monomial integrals I[n] = int_{-h}^{h} t^n dt.
std::vector<Rational> monomial_integrals(unsigned max_exponent, const Rational& h);

}  // namespace liquidtop
