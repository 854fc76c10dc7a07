#pragma once

#include "liquidtop/basis.hpp"
#include "liquidtop/dynamics.hpp"
#include "liquidtop/model.hpp"
#include "liquidtop/operators.hpp"
#include "liquidtop/spectral.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace liquidtop {

/// Location of the linear stability threshold in lambda^2 by bisection of
/// sign(min_re_sigma1), compared against the analytic beta^2/(C-M).
struct ThresholdResult {
    double lambda2_star_numeric = 0.0;
    double lambda2_star_analytic = 0.0;
    double relative_error = 0.0;
    double final_bracket_width = 0.0;
    std::vector<std::pair<double, double>> trace;  // (lambda2, min_re_sigma1)
};

/// Bisection on lambda^2 to relative bracket rel_bracket.  Preconditions:
/// C > M (PreconditionViolation) and opposite signs at the endpoints
/// (NoSignChange).
ThresholdResult threshold_bisection(const SolenoidalBasis& basis, const BodyParams& params,
                                    double lambda2_lo, double lambda2_hi,
                                    double rel_bracket = 1e-4);

struct StabilityRunSettings {
    std::vector<double> deltas{1e-2, 1e-3, 1e-4};
    double alpha = 0.8;
    double horizon = 6000.0;
    double rtol = 1e-8;
    double atol = 1e-10;
    int samples = 401;
    double sup_factor = 10.0;        // sup ||u||_alpha <= sup_factor * delta
    double rate_factor = 2.0;        // fitted kappa within this factor of gamma
    double terminal_tol = 1e-6;      // |z(T)|, |omega_perp(T)|
    double z_fraction = 0.3;         // share of ||u0||_alpha^2 placed in z
    std::uint64_t seed = 2024;
};

struct StabilityCase {
    double delta;
    double sup_norm_alpha, sup_ratio;
    double kappa, kappa_over_gamma, fit_r_squared;
    double terminal_z_norm, terminal_omega_perp, terminal_r;
    double constraint_drift;
    bool passed;
    std::vector<std::string> failures;
};

struct StabilityReport {
    double gamma_gap = 0.0;
    std::vector<StabilityCase> cases;
    double sup_ratio_spread = 0.0;   // max/min of sup_ratio across deltas
    bool passed = false;
    std::vector<std::string> failures;
};

/// Integrates from admissible random data on the ||.||_alpha sphere for each
/// delta and checks the Liapunov bound, the exponential decay of the range
/// component, and the upright terminal state.  Precondition: classify_regime
/// must be Stable (PreconditionViolation).
StabilityReport stability_run(const SolenoidalBasis& basis, const BodyParams& params,
                              const StabilityRunSettings& settings);

struct InstabilityRunSettings {
    std::vector<double> deltas{1e-3, 1e-5};
    double alpha = 0.8;
    double horizon = 200.0;
    double rtol = 1e-8;
    double atol = 1e-10;
    int samples = 401;
    double escape_level = 1e-1;      // ||u||_alpha threshold declaring escape
    double scaling_slack = 1.5;      // factor allowed around the growth model
};

struct InstabilityCase {
    double delta;
    bool escaped;
    double escape_time;
    double predicted_time;           // ln(escape_level/delta) / a0
    double time_over_predicted;
    bool passed;
    std::vector<std::string> failures;
};

struct InstabilityReport {
    double a0 = 0.0;                 // -min Re sigma1
    std::vector<InstabilityCase> cases;
    double escape_time_ratio = 0.0;        // t(delta_min) / t(delta_max)
    double predicted_log_ratio = 0.0;      // log(1/delta_min)/log(1/delta_max)
    bool passed = false;
    std::vector<std::string> failures;
};

/// Seeds delta * Re(phi) with phi the eigenvector of the eigenvalue of
/// minimal real part (z-part re-projected onto the constraint manifold) and
/// requires escape past escape_level in finite time for every delta, with
/// escape times consistent with the exponential growth model.
/// Precondition: classify_regime in {UnstableSubcritical, UnstableFlatTop}.
InstabilityReport instability_run(const SolenoidalBasis& basis, const BodyParams& params,
                                  const InstabilityRunSettings& settings);

struct ConvergenceRow {
    int degree;
    int N;
    double gamma_gap;
    double threshold_estimate;
    double threshold_error;
    double kappa0;
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    bool n_monotone = false;
    bool threshold_cauchy = false;   // successive |est(d+1)-est(d)| nonincreasing
    double threshold_resolution = 0.0;  // bisection bracket width (comparison slack)
    bool passed = false;
};

/// Per-degree N, spectral gap, threshold estimate and kappa0 for the
/// reference parameters.  Requires at least two degrees.
ConvergenceStudy convergence_study(const BodyParams& params, const std::vector<int>& degrees,
                                   double rel_bracket = 1e-4);

/// Smallest generalized eigenvalue of (gram - S^T I^{-1} S) against gram;
/// the discrete coercivity constant of the fluid energy, in (0, 1].
double kappa0_estimate(const ReducedSystem& sys);

/// Random admissible initial data uniform on the ||.||_alpha sphere of radius
/// delta intersected with the constraint manifold (z carries z_fraction of
/// the squared norm).
Eigen::VectorXd random_admissible_state(const ReducedSystem& sys, const FractionalNorm& norm,
                                        double delta, double z_fraction, std::mt19937_64& rng);

/// Parameter draws for the sign-classification sweep.  Draws are rejected
/// within `margin` (relative) of the stability boundaries lambda^2 = beta^2/(C-M)
/// and C = M.
BodyParams draw_regime_params(std::mt19937_64& rng, RegimeKind target, double margin,
                              double cavity_scale);

/// JSON encodings for the run reports.
std::string threshold_result_json(const ThresholdResult& r);
std::string stability_report_json(const StabilityReport& r);
std::string instability_report_json(const InstabilityReport& r);
std::string convergence_study_json(const ConvergenceStudy& r);

}  // namespace liquidtop
