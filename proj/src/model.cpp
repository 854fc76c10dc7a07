#include "liquidtop/model.hpp"

#include "liquidtop/errors.hpp"
#include "liquidtop/polynomial.hpp"

#include <cmath>
#include <sstream>

namespace liquidtop {

std::optional<double> BodyParams::threshold_lambda2() const {
    if (C <= M()) return std::nullopt;
    return beta2 / (C - M());
}

std::string to_string(RegimeKind k) {
    switch (k) {
        case RegimeKind::Stable: return "Stable";
        case RegimeKind::UnstableSubcritical: return "UnstableSubcritical";
        case RegimeKind::UnstableFlatTop: return "UnstableFlatTop";
        case RegimeKind::Boundary: return "Boundary";
        case RegimeKind::Degenerate: return "Degenerate";
    }
    return "?";
}

std::array<Rational, 3> fluid_inertia_diag(const Rational& rho, const Rational& h) {
    // rho * int (|x|^2 d_ij - x_i x_j): diagonal int(y^2+z^2) etc.; the cube
    // is symmetric, so all three entries coincide and off-diagonals vanish.
    auto sq = [](int axis) {
        return Polynomial3::monomial(axis == 0 ? 2 : 0, axis == 1 ? 2 : 0, axis == 2 ? 2 : 0,
                                     Rational(1));
    };
    Rational ix = integrate_cube(sq(0), h);
    Rational iy = integrate_cube(sq(1), h);
    Rational iz = integrate_cube(sq(2), h);
    return {rho * (iy + iz), rho * (ix + iz), rho * (ix + iy)};
}

BodyParams make_params(const RawParams& raw) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw NonPositiveParameter(std::string(name) + " must be strictly positive");
        }
    };
    positive(raw.A, "A");
    positive(raw.B, "B");
    positive(raw.C, "C");
    positive(raw.beta2, "beta2");
    positive(raw.rho, "rho");
    positive(raw.nu, "nu");
    positive(raw.cavity_scale, "cavity_scale");
    if (raw.lambda == 0.0 || !std::isfinite(raw.lambda)) {
        throw NonPositiveParameter("lambda must be nonzero");
    }

    auto fluid = fluid_inertia_diag(rational_of(raw.rho), rational_of(raw.cavity_scale));
    const double moments[3] = {raw.A, raw.B, raw.C};
    const char* names[3] = {"A", "B", "C"};
    for (int i = 0; i < 3; ++i) {
        if (!(rational_of(moments[i]) > fluid[i])) {
            std::ostringstream os;
            os << names[i] << " = " << moments[i]
               << " does not exceed the fluid-only moment of inertia " << to_double(fluid[i]);
            throw FluidInertiaExceedsTotal(os.str());
        }
    }
    return BodyParams{raw.A, raw.B, raw.C, raw.beta2, raw.rho, raw.nu, raw.lambda,
                      raw.cavity_scale};
}

std::pair<double, double> kernel_coefficients(const BodyParams& p) {
    double l2 = p.lambda2();
    return {l2 * (p.C - p.A) / p.beta2, l2 * (p.C - p.B) / p.beta2};
}

double delta_coefficient(const BodyParams& p) { return p.lambda2() * p.C - p.beta2; }

RegimeVerdict classify_regime(const BodyParams& p, double tol) {
    auto [ka, kb] = kernel_coefficients(p);
    RegimeVerdict v;
    v.K_A = ka;
    v.K_B = kb;
    v.threshold_lambda2 = p.threshold_lambda2();

    if (std::abs(ka - 1.0) < tol || std::abs(kb - 1.0) < tol) {
        v.kind = RegimeKind::Degenerate;
        return v;
    }
    const double M = p.M();
    const double scale = std::max(p.C, M);
    if (p.C < M - tol * scale) {
        v.kind = RegimeKind::UnstableFlatTop;
        return v;
    }
    if (p.C <= M + tol * scale) {
        v.kind = RegimeKind::Boundary;
        return v;
    }
    const double thr = p.beta2 / (p.C - M);
    if (p.lambda2() > thr * (1.0 + tol)) {
        v.kind = RegimeKind::Stable;
    } else if (p.lambda2() < thr * (1.0 - tol)) {
        v.kind = RegimeKind::UnstableSubcritical;
    } else {
        v.kind = RegimeKind::Boundary;
    }
    return v;
}

bool tilt_form_positive_definite(double J, double delta, double lambda) {
    // [J, -lambda J; -lambda J, delta]: leading minor J, determinant J(delta - lambda^2 J)
    return J > 0.0 && delta > lambda * lambda * J;
}

}  // namespace liquidtop
