#pragma once

#include "liquidtop/polynomial.hpp"
#include "liquidtop/rational.hpp"

#include <array>
#include <string>
#include <vector>

namespace liquidtop {

/// Dense matrix / rank-3 tensor of exact rationals (row-major).
struct ExactMatrix {
    int rows = 0, cols = 0;
    std::vector<Rational> a;

    ExactMatrix() = default;
    ExactMatrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, Rational(0)) {}
    Rational& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    const Rational& operator()(int i, int j) const {
        return a[static_cast<std::size_t>(i) * cols + j];
    }
};

struct ExactTensor {
    int n = 0;  // n x n x n
    std::vector<Rational> a;

    ExactTensor() = default;
    explicit ExactTensor(int n_) : n(n_), a(static_cast<std::size_t>(n_) * n_ * n_, Rational(0)) {}
    Rational& operator()(int i, int j, int k) {
        return a[(static_cast<std::size_t>(i) * n + j) * n + k];
    }
    const Rational& operator()(int i, int j, int k) const {
        return a[(static_cast<std::size_t>(i) * n + j) * n + k];
    }
};

/// Exact divergence-free, no-slip polynomial velocity basis on [-h,h]^3
/// together with every Galerkin integral the reduced system needs.
///
/// Fields are b = grad(phi^2 m) x e for monomials m of total degree <= degree
/// and axis directions e, with phi = (h^2-x^2)(h^2-y^2)(h^2-z^2); a maximal
/// linearly independent subset is selected by exact Gram-rank elimination.
///
/// Tables are stored at unit density and viscosity; physical scalings
/// (rho, rho*nu) are applied when the floating-point system is assembled:
///   gram[j][k]       = int b_j . b_k
///   stiffness[j][k]  = int grad b_j : grad b_k
///   moment[i][k]     = int (x cross b_k) . e_i
///   coriolis[i][j][k]= int b_j . (e_i cross b_k)
///   convective[j][k][l] = int b_j . (b_k . grad b_l)
struct SolenoidalBasis {
    Rational h;
    int degree = 0;
    std::vector<VectorField> fields;

    ExactMatrix gram;                   // N x N, symmetric positive definite
    ExactMatrix stiffness;              // N x N, symmetric positive definite
    ExactMatrix moment;                 // 3 x N
    std::array<ExactMatrix, 3> coriolis;  // N x N, antisymmetric
    ExactTensor convective;             // skew in first/third slots

    int size() const { return static_cast<int>(fields.size()); }
};

/// Builds the basis and fills every integral table exactly.
/// Throws EmptyBasis if no independent field survives (cannot happen for
/// degree >= 0; kept as a guard).
SolenoidalBasis build_cube_basis(const Rational& h, int degree);

/// Candidate generator (before rank elimination), exposed for tests.
std::vector<VectorField> cube_basis_candidates(const Rational& h, int degree);

/// Single-entry evaluators used by the table assembly and by tests.
Rational gram_entry(const VectorField& a, const VectorField& b, const Rational& h);
Rational stiffness_entry(const VectorField& a, const VectorField& b, const Rational& h);
Rational moment_entry(int axis, const VectorField& b, const Rational& h);
Rational coriolis_entry(int axis, const VectorField& a, const VectorField& b, const Rational& h);
Rational convective_entry(const VectorField& a, const VectorField& b, const VectorField& c,
                          const Rational& h);

/// JSON (de)serialization of the integral tables, rationals as "num/den".
/// Schema: {h, degree, N, gram[][], stiffness[][], moment[3][],
///          coriolis[3][][], convective[][][]}.
/// Loading regenerates the fields deterministically from (h, degree) and
/// takes the tables from the file after a consistency check.
void save_basis(const SolenoidalBasis& basis, const std::string& path);
SolenoidalBasis load_basis(const std::string& path);

}  // namespace liquidtop
