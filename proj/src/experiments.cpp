#include "liquidtop/experiments.hpp"

#include "liquidtop/errors.hpp"
#include "liquidtop/rng.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace liquidtop {

namespace {

double min_re_at_lambda2(const SolenoidalBasis& basis, BodyParams p, double lambda2) {
    p.lambda = std::sqrt(lambda2);
    ReducedSystem sys = assemble(basis, p);
    return spectrum(generator(sys)).min_re_sigma1;
}

}  // namespace

ThresholdResult threshold_bisection(const SolenoidalBasis& basis, const BodyParams& params,
                                    double lambda2_lo, double lambda2_hi, double rel_bracket) {
    auto analytic = params.threshold_lambda2();
    if (!analytic) {
        throw PreconditionViolation("no threshold exists for C <= max{A,B}");
    }
    if (!(lambda2_lo > 0.0) || !(lambda2_hi > lambda2_lo)) {
        throw PreconditionViolation("need 0 < lambda2_min < lambda2_max");
    }

    ThresholdResult res;
    res.lambda2_star_analytic = *analytic;

    double lo = lambda2_lo, hi = lambda2_hi;
    double f_lo = min_re_at_lambda2(basis, params, lo);
    double f_hi = min_re_at_lambda2(basis, params, hi);
    res.trace.emplace_back(lo, f_lo);
    res.trace.emplace_back(hi, f_hi);
    if (!(f_lo < 0.0 && f_hi > 0.0)) {
        throw NoSignChange("sweep endpoints do not bracket a stability change");
    }
    while (hi - lo > rel_bracket * 0.5 * (hi + lo)) {
        double mid = 0.5 * (lo + hi);
        double f_mid = min_re_at_lambda2(basis, params, mid);
        res.trace.emplace_back(mid, f_mid);
        (f_mid > 0.0 ? hi : lo) = mid;
    }
    res.lambda2_star_numeric = 0.5 * (lo + hi);
    res.final_bracket_width = hi - lo;
    res.relative_error =
        std::abs(res.lambda2_star_numeric - res.lambda2_star_analytic) / res.lambda2_star_analytic;
    return res;
}

Eigen::VectorXd random_admissible_state(const ReducedSystem& sys, const FractionalNorm& norm,
                                        double delta, double z_fraction, std::mt19937_64& rng) {
    const int N = sys.n_v, n = sys.n_total;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);

    const double zmag = delta * std::sqrt(z_fraction);
    Eigen::Vector3d z = zmag > 0.0 ? admissible_z(random_direction(rng), zmag)
                                   : Eigen::Vector3d::Zero();

    Eigen::VectorXd g = gaussian_vector(rng, N + 3);
    u.head(N + 3) = g;
    double cur = norm(u);
    double want = delta * std::sqrt(std::max(0.0, 1.0 - z_fraction));
    if (cur > 0.0) u.head(N + 3) *= want / cur;
    u.segment<3>(N + 3) = z;
    return u;
}

StabilityReport stability_run(const SolenoidalBasis& basis, const BodyParams& params,
                              const StabilityRunSettings& settings) {
    if (classify_regime(params).kind != RegimeKind::Stable) {
        throw PreconditionViolation("stability_run requires a Stable regime");
    }
    ReducedSystem sys = assemble(basis, params);
    Eigen::MatrixXd L = generator(sys);
    SpectrumReport rep = spectrum(L);
    if (!rep.gamma_gap) {
        throw UnexpectedGrowth("stable parameters produced a nonpositive spectral gap");
    }
    Projections proj = projections(rep, L);
    FractionalNorm norm(sys, settings.alpha);

    StabilityReport report;
    report.gamma_gap = *rep.gamma_gap;
    const double gamma = *rep.gamma_gap;

    for (std::size_t di = 0; di < settings.deltas.size(); ++di) {
        const double delta = settings.deltas[di];
        std::mt19937_64 rng(settings.seed + di);
        Eigen::VectorXd u0 = random_admissible_state(sys, norm, delta, settings.z_fraction, rng);

        // Horizon long enough for the slow precession mode to reach the
        // terminal tolerance from this amplitude.
        const double needed =
            (std::log(std::max(3.0 * delta / settings.terminal_tol, 10.0)) + 2.0) / gamma;
        const double horizon = std::max(settings.horizon, needed);

        IntegrateControls ctl;
        ctl.rtol = settings.rtol;
        ctl.atol = settings.atol;
        ctl.samples = settings.samples;
        ctl.alpha = settings.alpha;
        ctl.projections = &proj;
        Trajectory traj = integrate(sys, PerturbationState::from_flat(u0), horizon, ctl);

        StabilityCase cs;
        cs.delta = delta;
        cs.passed = true;

        if (traj.status != TrajectoryStatus::Completed) {
            cs.failures.push_back("UnexpectedGrowth: blow-up guard tripped in a stable regime");
            cs.passed = false;
        }
        double sup = 0.0, drift0 = traj.samples.front().constraint, drift = 0.0;
        for (const auto& s : traj.samples) {
            sup = std::max(sup, s.norm_alpha);
            drift = std::max(drift, std::abs(s.constraint - drift0));
        }
        cs.sup_norm_alpha = sup;
        cs.sup_ratio = sup / delta;
        cs.constraint_drift = drift;
        if (sup > settings.sup_factor * delta) {
            cs.failures.push_back("UnexpectedGrowth: sup ||u||_alpha exceeds the Liapunov bound");
            cs.passed = false;
        }

        try {
            DecayFit fit = decay_fit(traj, proj, settings.alpha);
            cs.kappa = fit.kappa;
            cs.kappa_over_gamma = fit.kappa / gamma;
            cs.fit_r_squared = fit.r_squared;
            cs.terminal_r = fit.r;
            if (!(cs.kappa_over_gamma >= 1.0 / settings.rate_factor &&
                  cs.kappa_over_gamma <= settings.rate_factor)) {
                cs.failures.push_back("decay rate outside the spectral-gap window");
                cs.passed = false;
            }
        } catch (const FitUnreliable& e) {
            cs.kappa = cs.kappa_over_gamma = cs.fit_r_squared =
                std::numeric_limits<double>::quiet_NaN();
            cs.terminal_r = 0.0;
            cs.failures.push_back(std::string("FitUnreliable: ") + e.what());
            cs.passed = false;
        }

        const auto& last = traj.samples.back();
        cs.terminal_z_norm = last.z.norm();
        cs.terminal_omega_perp = std::hypot(last.omega[0], last.omega[1]);
        if (cs.terminal_z_norm > settings.terminal_tol) {
            cs.failures.push_back("terminal |z| above tolerance (no upright return)");
            cs.passed = false;
        }
        if (cs.terminal_omega_perp > settings.terminal_tol) {
            cs.failures.push_back("terminal omega not aligned with e3");
            cs.passed = false;
        }
        report.cases.push_back(std::move(cs));
    }

    double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
    for (const auto& c : report.cases) {
        rmin = std::min(rmin, c.sup_ratio);
        rmax = std::max(rmax, c.sup_ratio);
    }
    report.sup_ratio_spread = rmin > 0.0 ? rmax / rmin : std::numeric_limits<double>::infinity();

    report.passed = true;
    for (const auto& c : report.cases) {
        if (!c.passed) {
            report.passed = false;
            for (const auto& f : c.failures) report.failures.push_back(f);
        }
    }
    return report;
}

InstabilityReport instability_run(const SolenoidalBasis& basis, const BodyParams& params,
                                  const InstabilityRunSettings& settings) {
    RegimeKind kind = classify_regime(params).kind;
    if (kind != RegimeKind::UnstableSubcritical && kind != RegimeKind::UnstableFlatTop) {
        throw PreconditionViolation("instability_run requires an unstable regime");
    }
    ReducedSystem sys = assemble(basis, params);
    Eigen::MatrixXd L = generator(sys);

    Eigen::EigenSolver<Eigen::MatrixXd> es(L, true);
    if (es.info() != Eigen::Success) throw EigensolverFailure("eigensolver did not converge");
    int i0 = 0;
    for (int i = 1; i < es.eigenvalues().size(); ++i) {
        if (es.eigenvalues()[i].real() < es.eigenvalues()[i0].real()) i0 = i;
    }
    InstabilityReport report;
    report.a0 = -es.eigenvalues()[i0].real();
    if (!(report.a0 > 0.0)) {
        report.passed = false;
        report.failures.push_back("NoEscape: no eigenvalue with negative real part");
        return report;
    }

    FractionalNorm norm(sys, settings.alpha);
    const int N = sys.n_v;
    Eigen::VectorXd dir = es.eigenvectors().col(i0).real();
    dir /= norm(dir);  // the growth-mode seed, alpha-normalized

    for (double delta : settings.deltas) {
        Eigen::VectorXd u0 = delta * dir;
        // Re(phi) satisfies the constraint only to O(delta^2); re-project.
        u0.segment<3>(N + 3) = project_to_constraint(Eigen::Vector3d(u0.segment<3>(N + 3)));

        IntegrateControls ctl;
        ctl.rtol = settings.rtol;
        ctl.atol = settings.atol;
        ctl.samples = settings.samples;
        ctl.alpha = settings.alpha;
        ctl.stop_norm = settings.escape_level;
        // the escape level terminates the run; only the absolute guard backs it up
        ctl.guard_factor = std::numeric_limits<double>::infinity();
        ctl.guard_abs = 10.0 * settings.escape_level;

        InstabilityCase cs;
        cs.delta = delta;
        cs.passed = true;
        Trajectory traj = integrate(sys, PerturbationState::from_flat(u0), settings.horizon, ctl);
        cs.escaped = traj.status == TrajectoryStatus::Escaped && !traj.guard_triggered;
        cs.escape_time = traj.escape_time;
        cs.predicted_time = std::log(settings.escape_level / delta) / report.a0;
        cs.time_over_predicted = cs.escape_time / cs.predicted_time;
        if (!cs.escaped) {
            cs.failures.push_back("NoEscape: trajectory stayed below the escape level");
            cs.passed = false;
        } else if (!(cs.time_over_predicted >= 1.0 / settings.scaling_slack &&
                     cs.time_over_predicted <= settings.scaling_slack)) {
            cs.failures.push_back("escape time inconsistent with the exponential growth model");
            cs.passed = false;
        }
        report.cases.push_back(std::move(cs));
    }

    // Escape times grow like log(1/delta)/a0: compare the measured ratio
    // between the extreme deltas against the log ratio.
    if (report.cases.size() >= 2) {
        const auto* cmin = &report.cases.front();
        const auto* cmax = &report.cases.front();
        for (const auto& c : report.cases) {
            if (c.delta < cmin->delta) cmin = &c;
            if (c.delta > cmax->delta) cmax = &c;
        }
        if (cmin->escaped && cmax->escaped && cmax->escape_time > 0.0) {
            report.escape_time_ratio = cmin->escape_time / cmax->escape_time;
            report.predicted_log_ratio = std::log(1.0 / cmin->delta) / std::log(1.0 / cmax->delta);
            double q = report.escape_time_ratio / report.predicted_log_ratio;
            if (!(q >= 1.0 / settings.scaling_slack && q <= settings.scaling_slack)) {
                report.failures.push_back("escape-time ratio deviates from log(1/delta) scaling");
            }
        }
    }

    report.passed = report.failures.empty();
    for (const auto& c : report.cases) {
        if (!c.passed) {
            report.passed = false;
            for (const auto& f : c.failures) report.failures.push_back(f);
        }
    }
    return report;
}

double kappa0_estimate(const ReducedSystem& sys) {
    Eigen::MatrixXd EF = sys.gram - sys.moment.transpose() *
                                        sys.inertia_diag().cwiseInverse().asDiagonal() *
                                        sys.moment;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(EF, sys.gram);
    if (ges.info() != Eigen::Success) throw EigensolverFailure("kappa0 eigensolve failed");
    return ges.eigenvalues()[0];
}

ConvergenceStudy convergence_study(const BodyParams& params, const std::vector<int>& degrees,
                                   double rel_bracket) {
    if (degrees.size() < 2) throw PreconditionViolation("need at least two degrees");
    auto thr = params.threshold_lambda2();
    if (!thr) throw PreconditionViolation("convergence study needs C > max{A,B}");

    ConvergenceStudy study;
    for (int deg : degrees) {
        SolenoidalBasis basis = build_cube_basis(rational_of(params.cavity_scale), deg);
        ReducedSystem sys = assemble(basis, params);
        SpectrumReport rep = spectrum(generator(sys));
        ThresholdResult tr = threshold_bisection(basis, params, 0.5 * *thr, 2.0 * *thr,
                                                 rel_bracket);
        ConvergenceRow row;
        row.degree = deg;
        row.N = basis.size();
        row.gamma_gap = rep.min_re_sigma1;
        row.threshold_estimate = tr.lambda2_star_numeric;
        row.threshold_error = tr.relative_error;
        row.kappa0 = kappa0_estimate(sys);
        study.threshold_resolution = std::max(study.threshold_resolution, tr.final_bracket_width);
        study.rows.push_back(row);
    }

    study.n_monotone = true;
    for (std::size_t i = 1; i < study.rows.size(); ++i) {
        if (study.rows[i].N < study.rows[i - 1].N) study.n_monotone = false;
    }
    // Successive threshold differences must not grow beyond the bisection
    // resolution (the discrete threshold is already exact at low degree, so
    // differences sit at the bracket width).
    study.threshold_cauchy = true;
    for (std::size_t i = 2; i < study.rows.size(); ++i) {
        double d1 = std::abs(study.rows[i].threshold_estimate -
                             study.rows[i - 1].threshold_estimate);
        double d0 = std::abs(study.rows[i - 1].threshold_estimate -
                             study.rows[i - 2].threshold_estimate);
        if (d1 > d0 + study.threshold_resolution) study.threshold_cauchy = false;
    }
    bool kappa_ok = true;
    for (const auto& r : study.rows) {
        if (!(r.kappa0 > 0.0 && r.kappa0 <= 1.0)) kappa_ok = false;
    }
    study.passed = study.n_monotone && study.threshold_cauchy && kappa_ok;
    return study;
}

BodyParams draw_regime_params(std::mt19937_64& rng, RegimeKind target, double margin,
                              double cavity_scale) {
    for (;;) {
        RawParams raw;
        raw.rho = 1.0;
        raw.nu = std::exp(uniform(rng, std::log(0.3), std::log(3.0)));
        raw.cavity_scale = cavity_scale;
        raw.A = uniform(rng, 0.8, 2.4);
        raw.B = uniform(rng, 0.8, 2.4);
        const double M = std::max(raw.A, raw.B);
        raw.beta2 = uniform(rng, 0.5, 8.0);

        double lambda2 = 0.0;
        switch (target) {
            case RegimeKind::Stable: {
                raw.C = M * uniform(rng, 1.1, 3.0);
                lambda2 = raw.beta2 / (raw.C - M) * uniform(rng, 1.0 + 2.0 * margin, 4.0);
                break;
            }
            case RegimeKind::UnstableSubcritical: {
                raw.C = M * uniform(rng, 1.1, 3.0);
                lambda2 = raw.beta2 / (raw.C - M) * uniform(rng, 0.25, 1.0 - 2.0 * margin);
                break;
            }
            case RegimeKind::UnstableFlatTop: {
                raw.C = M * uniform(rng, 0.3, 1.0 - 2.0 * margin);
                lambda2 = uniform(rng, 0.25, 6.0);
                break;
            }
            default:
                throw PreconditionViolation("can only draw Stable/Unstable regimes");
        }
        raw.lambda = std::sqrt(lambda2);

        BodyParams p;
        try {
            p = make_params(raw);
        } catch (const Error&) {
            continue;
        }
        auto [ka, kb] = kernel_coefficients(p);
        if (std::abs(ka - 1.0) < 5.0 * margin || std::abs(kb - 1.0) < 5.0 * margin) continue;
        if (classify_regime(p).kind != target) continue;
        return p;
    }
}

// ---------------------------------------------------------------------------
// JSON reports

namespace {
nlohmann::json case_json(const StabilityCase& c) {
    return {{"delta", c.delta},
            {"sup_norm_alpha", c.sup_norm_alpha},
            {"sup_ratio", c.sup_ratio},
            {"kappa", c.kappa},
            {"kappa_over_gamma", c.kappa_over_gamma},
            {"fit_r_squared", c.fit_r_squared},
            {"terminal_z_norm", c.terminal_z_norm},
            {"terminal_omega_perp", c.terminal_omega_perp},
            {"terminal_r", c.terminal_r},
            {"constraint_drift", c.constraint_drift},
            {"passed", c.passed},
            {"failures", c.failures}};
}
}  // namespace

std::string threshold_result_json(const ThresholdResult& r) {
    nlohmann::json trace = nlohmann::json::array();
    for (auto& [l2, mre] : r.trace) trace.push_back({l2, mre});
    nlohmann::json j{{"lambda2_star_numeric", r.lambda2_star_numeric},
                     {"lambda2_star_analytic", r.lambda2_star_analytic},
                     {"relative_error", r.relative_error},
                     {"final_bracket_width", r.final_bracket_width},
                     {"trace", trace}};
    return j.dump(2);
}

std::string stability_report_json(const StabilityReport& r) {
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& c : r.cases) cases.push_back(case_json(c));
    nlohmann::json j{{"gamma_gap", r.gamma_gap},
                     {"cases", cases},
                     {"sup_ratio_spread", r.sup_ratio_spread},
                     {"passed", r.passed},
                     {"failures", r.failures}};
    return j.dump(2);
}

std::string instability_report_json(const InstabilityReport& r) {
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& c : r.cases) {
        cases.push_back({{"delta", c.delta},
                         {"escaped", c.escaped},
                         {"escape_time", c.escape_time},
                         {"predicted_time", c.predicted_time},
                         {"time_over_predicted", c.time_over_predicted},
                         {"passed", c.passed},
                         {"failures", c.failures}});
    }
    nlohmann::json j{{"a0", r.a0},
                     {"cases", cases},
                     {"escape_time_ratio", r.escape_time_ratio},
                     {"predicted_log_ratio", r.predicted_log_ratio},
                     {"passed", r.passed},
                     {"failures", r.failures}};
    return j.dump(2);
}

std::string convergence_study_json(const ConvergenceStudy& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"degree", row.degree},
                        {"N", row.N},
                        {"gamma_gap", row.gamma_gap},
                        {"threshold_estimate", row.threshold_estimate},
                        {"threshold_error", row.threshold_error},
                        {"kappa0", row.kappa0}});
    }
    nlohmann::json j{{"rows", rows},
                     {"n_monotone", r.n_monotone},
                     {"threshold_cauchy", r.threshold_cauchy},
                     {"threshold_resolution", r.threshold_resolution},
                     {"passed", r.passed}};
    return j.dump(2);
}

}  // namespace liquidtop
