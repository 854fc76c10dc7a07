#pragma once

#include "liquidtop/rational.hpp"

#include <array>
#include <optional>
#include <string>

namespace liquidtop {

/// Physical constants of the coupled body-liquid system.
///
/// A, B, C are the principal moments of inertia about the fixed point, C the
/// one about the spin axis e3.  beta2 = M*l*g couples gravity to the tilt,
/// rho and nu are the liquid density and kinematic viscosity, lambda the
/// steady spin rate, cavity_scale the half-width of the cube cavity.
struct BodyParams {
    double A, B, C;
    double beta2;
    double rho;
    double nu;
    double lambda;
    double cavity_scale;

    double M() const { return A > B ? A : B; }                 // max{A,B}
    double lambda2() const { return lambda * lambda; }
    /// beta^2/(C-M), defined only when C > M.
    std::optional<double> threshold_lambda2() const;
};

enum class RegimeKind { Stable, UnstableSubcritical, UnstableFlatTop, Boundary, Degenerate };

std::string to_string(RegimeKind k);

struct RegimeVerdict {
    RegimeKind kind;
    std::optional<double> threshold_lambda2;  // present iff C > M
    double K_A, K_B;
};

struct RawParams {
    double A, B, C, beta2, rho, nu, lambda, cavity_scale;
};

/// Validates raw scalars into BodyParams.
/// Throws NonPositiveParameter, FluidInertiaExceedsTotal.
BodyParams make_params(const RawParams& raw);

/// Diagonal of the fluid-only inertia tensor rho*int(|x|^2 d_ij - x_i x_j)
/// for the cube cavity, computed exactly (off-diagonals vanish by symmetry).
std::array<Rational, 3> fluid_inertia_diag(const Rational& rho, const Rational& h);

/// K_A = lambda^2 (C-A)/beta^2, K_B = lambda^2 (C-B)/beta^2.
std::pair<double, double> kernel_coefficients(const BodyParams& p);

/// delta = lambda^2 C - beta^2.
double delta_coefficient(const BodyParams& p);

/// Closed-form regime classification.  Degenerate (K_A or K_B within tol of
/// 1) overrides the others since the kernel count breaks there.
RegimeVerdict classify_regime(const BodyParams& p, double tol = 1e-9);

/// Positive-definiteness of the tilt form J*zeta^2 + delta*z^2 - 2*lambda*J*zeta*z
/// as a 2x2 quadratic form; holds iff J > 0 and delta > lambda^2 J.
bool tilt_form_positive_definite(double J, double delta, double lambda);

}  // namespace liquidtop
