#include "liquidtop/dynamics.hpp"

#include "liquidtop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace liquidtop {

Eigen::VectorXd PerturbationState::flat() const {
    Eigen::VectorXd u(c.size() + 6);
    u.head(c.size()) = c;
    u.segment<3>(c.size()) = omega;
    u.segment<3>(c.size() + 3) = z;
    return u;
}

PerturbationState PerturbationState::from_flat(const Eigen::VectorXd& u, double t) {
    PerturbationState s;
    const int N = static_cast<int>(u.size()) - 6;
    s.c = u.head(N);
    s.omega = u.segment<3>(N);
    s.z = u.segment<3>(N + 3);
    s.t = t;
    return s;
}

Eigen::Vector3d admissible_z(const Eigen::Vector3d& direction, double magnitude) {
    if (magnitude < 0.0 || magnitude > 2.0) {
        throw MagnitudeTooLarge("|z| cannot exceed 2 (gamma and -e3 are unit vectors)");
    }
    if (direction.norm() == 0.0) throw Error("admissible_z needs a nonzero direction");
    if (magnitude == 0.0) return Eigen::Vector3d::Zero();

    // Rotate gamma = -e3 toward `direction` by the angle with 2(1-cos) = m^2;
    // z = gamma + e3 = (m^2/2) e3 + sin(theta) w with w the unit in-plane part.
    const Eigen::Vector3d e3(0, 0, 1);
    Eigen::Vector3d perp = direction - direction.dot(e3) * e3;
    Eigen::Vector3d w = perp.norm() > 1e-14 * direction.norm()
                            ? Eigen::Vector3d(perp.normalized())
                            : Eigen::Vector3d(1, 0, 0);  // axis-aligned request: pick e1
    const double cos_t = 1.0 - 0.5 * magnitude * magnitude;
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    return (1.0 - cos_t) * e3 + sin_t * w;
}

double constraint_residual(const Eigen::Vector3d& z) { return z.squaredNorm() - 2.0 * z.z(); }

double constraint_residual(const Eigen::VectorXd& u) {
    const int N = static_cast<int>(u.size()) - 6;
    return constraint_residual(Eigen::Vector3d(u.segment<3>(N + 3)));
}

Eigen::Vector3d project_to_constraint(const Eigen::Vector3d& z) {
    const Eigen::Vector3d e3(0, 0, 1);
    Eigen::Vector3d gamma = z - e3;
    double n = gamma.norm();
    if (n == 0.0) return e3;  // degenerate: gamma sits at the origin, pick the equator point
    return gamma / n + e3;
}

Eigen::Vector3d quadratic_forms(const BodyParams& p, const Eigen::Vector3d& omega_star,
                                const Eigen::Vector3d& z) {
    const double delta = delta_coefficient(p);
    const double J[3] = {p.A, p.B, p.C};
    Eigen::Vector3d q;
    for (int i = 0; i < 3; ++i) {
        q[i] = J[i] * omega_star[i] * omega_star[i] + delta * z[i] * z[i] -
               2.0 * p.lambda * J[i] * omega_star[i] * z[i];
    }
    return q;
}

namespace {

Eigen::Vector3d moment_coupling(const ReducedSystem& sys, const Eigen::VectorXd& c) {
    // a = -I^{-1} S c
    Eigen::Vector3d Sc = sys.moment * c;
    return -Sc.cwiseQuotient(sys.inertia_diag());
}

}  // namespace

double lyapunov_g(const ReducedSystem& sys, const Eigen::VectorXd& u) {
    const int N = sys.n_v;
    const Eigen::VectorXd c = u.head(N);
    const Eigen::Vector3d omega = u.segment<3>(N);
    const Eigen::Vector3d z = u.segment<3>(N + 3);
    const Eigen::Vector3d a = moment_coupling(sys, c);
    const Eigen::Vector3d ws = omega - a;
    const Eigen::Vector3d Id = sys.inertia_diag();
    const double delta = delta_coefficient(sys.params);
    return c.dot(sys.gram * c) - a.dot(Id.cwiseProduct(a)) + ws.dot(Id.cwiseProduct(ws)) +
           delta * z.squaredNorm() - 2.0 * sys.params.lambda * z.dot(Id.cwiseProduct(ws));
}

double fluid_energy(const ReducedSystem& sys, const Eigen::VectorXd& u) {
    const int N = sys.n_v;
    const Eigen::VectorXd c = u.head(N);
    const Eigen::Vector3d a = moment_coupling(sys, c);
    return c.dot(sys.gram * c) - a.dot(sys.inertia_diag().cwiseProduct(a));
}

RhsEvaluator::RhsEvaluator(const ReducedSystem& sys, bool linear_only)
    : sys_(&sys), L_total_(sys.stiffness_block + sys.gyro_block), llt_(sys.inertia),
      linear_(linear_only) {
    if (llt_.info() != Eigen::Success) throw InertiaNotPD("inertia block failed factorization");
}

Eigen::VectorXd RhsEvaluator::operator()(const Eigen::VectorXd& u) const {
    Eigen::VectorXd r = -(L_total_ * u);
    if (!linear_) r += nonlinear_rhs(*sys_, u);
    return llt_.solve(r);
}

Eigen::VectorXd rhs(const ReducedSystem& sys, const Eigen::VectorXd& u, bool linear_only) {
    return RhsEvaluator(sys, linear_only)(u);
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - bhat (5th minus embedded 4th order weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

struct DenseStep {
    double t0, dt;
    Eigen::VectorXd r1, r2, r3, r4, r5;

    Eigen::VectorXd eval(double t) const {
        double th = (t - t0) / dt, th1 = 1.0 - th;
        return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
    }
};

}  // namespace

Trajectory integrate(const ReducedSystem& sys, const PerturbationState& u0, double horizon,
                     const IntegrateControls& controls) {
    if (horizon <= 0.0) throw Error("horizon must be positive");
    if (controls.samples < 2) throw Error("need at least two samples");
    Eigen::VectorXd y0 = u0.flat();
    if (y0.size() != sys.n_total) throw DimensionMismatch("initial state has wrong dimension");
    if (std::abs(constraint_residual(y0)) >= std::max(controls.atol, 1e-14)) {
        throw InadmissibleInitialData("z(0) violates z.z - 2 z.e3 = 0 beyond atol");
    }

    const int n = sys.n_total, N = sys.n_v;
    RhsEvaluator f(sys, controls.linear_only);
    StokesEigs eigs = stokes_eigenpairs(sys);
    FractionalNorm norm_alpha(sys, eigs, controls.alpha);

    // plain state-space norm weight for ||Qu||
    Eigen::MatrixXd W0 = Eigen::MatrixXd::Zero(n, n);
    W0.topLeftCorner(N, N) = sys.gram;
    W0.block(N, N, 3, 3) = sys.inertia_diag().asDiagonal();
    W0.block(N + 3, N + 3, 3, 3) = Eigen::Matrix3d::Identity();

    // Explicit-scheme stability cap from the Stokes spectral radius.
    const double stokes_max = eigs.values.size() ? eigs.values[eigs.values.size() - 1] : 1.0;
    const double max_dt = std::min(horizon, 2.8 / std::max(stokes_max, 1e-12));

    Trajectory traj;
    traj.initial_norm_alpha = norm_alpha(y0);
    const double guard =
        std::min(controls.guard_factor * std::max(traj.initial_norm_alpha, 1e-300),
                 controls.guard_abs);

    // augmented state: dissipation quadrature q' = c^T stiffness c
    auto f_aug = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd out(n + 1);
        out.head(n) = f(y.head(n));
        Eigen::VectorXd c = y.head(N);
        out[n] = c.dot(sys.stiffness * c);
        return out;
    };

    auto sample_of = [&](double t, const Eigen::VectorXd& yaug) {
        TrajectorySample s;
        Eigen::VectorXd u = yaug.head(n);
        s.t = t;
        s.c_norm = u.head(N).norm();
        s.omega = u.segment<3>(N);
        s.z = u.segment<3>(N + 3);
        s.G = lyapunov_g(sys, u);
        s.E_F = fluid_energy(sys, u);
        Eigen::Vector3d a = moment_coupling(sys, u.head(N));
        Eigen::Vector3d q = quadratic_forms(sys.params, s.omega - a, s.z);
        s.Q1 = q[0];
        s.Q2 = q[1];
        s.Q3 = q[2];
        s.dirichlet = u.head(N).dot(sys.stiffness * u.head(N));
        s.constraint = constraint_residual(u);
        s.norm_alpha = norm_alpha(u);
        if (controls.projections) {
            Eigen::VectorXd pu = controls.projections->P * u;
            Eigen::VectorXd qu = controls.projections->Q * u;
            s.norm_P_alpha = norm_alpha(pu);
            s.norm_Q = std::sqrt(std::max(qu.dot(W0 * qu), 0.0));
        } else {
            s.norm_P_alpha = std::numeric_limits<double>::quiet_NaN();
            s.norm_Q = std::numeric_limits<double>::quiet_NaN();
        }
        s.dissipation_integral = yaug[n];
        traj.samples.push_back(std::move(s));
        traj.states.push_back(u);
    };

    Eigen::VectorXd y(n + 1);
    y.head(n) = y0;
    y[n] = 0.0;
    double t = 0.0;
    double dt = controls.dt_init > 0.0 ? std::min(controls.dt_init, max_dt)
                                       : std::min(max_dt, horizon * 1e-3);

    const int samples = controls.samples;
    int next_sample = 0;
    auto sample_time = [&](int i) { return horizon * static_cast<double>(i) / (samples - 1); };
    sample_of(0.0, y);
    next_sample = 1;

    Eigen::VectorXd k1 = f_aug(y), k2, k3, k4, k5, k6, k7;
    bool have_k1 = true;
    double last_err = 1.0;

    while (t < horizon) {
        dt = std::min(dt, horizon - t);
        if (dt < 1e-14 * std::max(1.0, std::abs(t))) {
            throw StepSizeUnderflow("step size underflow at t = " + std::to_string(t));
        }
        if (!have_k1) {
            k1 = f_aug(y);
            have_k1 = true;
        }
        k2 = f_aug(y + dt * (a21 * k1));
        k3 = f_aug(y + dt * (a31 * k1 + a32 * k2));
        k4 = f_aug(y + dt * (a41 * k1 + a42 * k2 + a43 * k3));
        k5 = f_aug(y + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        k6 = f_aug(y + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        Eigen::VectorXd ynew = y + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = f_aug(ynew);  // FSAL

        Eigen::VectorXd err =
            dt * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        double err_norm = 0.0;
        for (int i = 0; i <= n; ++i) {
            double sc = controls.atol +
                        controls.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            double r = err[i] / sc;
            err_norm += r * r;
        }
        err_norm = std::sqrt(err_norm / (n + 1));

        if (!std::isfinite(err_norm) || !ynew.allFinite()) {
            throw NonFiniteState("non-finite state at t = " + std::to_string(t));
        }

        if (err_norm > 1.0) {
            ++traj.rejected_steps;
            dt *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
            last_err = 1.0;  // restart the PI memory after a rejection
            continue;
        }

        // accepted
        ++traj.accepted_steps;
        DenseStep dense;
        dense.t0 = t;
        dense.dt = dt;
        dense.r1 = y;
        dense.r2 = ynew - y;
        dense.r3 = dt * k1 - dense.r2;
        dense.r4 = dense.r2 - dt * k7 - dense.r3;
        dense.r5 = dt * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

        double t_new = t + dt;
        double a_new = norm_alpha(ynew.head(n));

        bool stopping = false;
        double t_stop = t_new;
        if (std::isfinite(controls.stop_norm) && a_new >= controls.stop_norm) {
            // refine the first crossing of the escape level within this step
            double lo = t, hi = t_new;
            for (int it = 0; it < 60 && (hi - lo) > 1e-12 * std::max(1.0, t_new); ++it) {
                double mid = 0.5 * (lo + hi);
                if (norm_alpha(dense.eval(mid).head(n)) >= controls.stop_norm) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            t_stop = hi;
            traj.status = TrajectoryStatus::Escaped;
            traj.escape_time = t_stop;
            stopping = true;
        } else if (a_new > guard) {
            traj.status = TrajectoryStatus::Escaped;
            traj.escape_time = t_new;
            traj.guard_triggered = true;
            stopping = true;
        }

        while (next_sample < samples && sample_time(next_sample) <= t_stop + 1e-14) {
            double ts = std::min(sample_time(next_sample), t_stop);
            sample_of(ts, dense.eval(ts));
            ++next_sample;
        }

        if (stopping) {
            sample_of(t_stop, dense.eval(t_stop));
            return traj;
        }

        t = t_new;
        y.swap(ynew);
        k1.swap(k7);  // FSAL
        // PI controller (Gustafsson): damps the step-size oscillation that a
        // plain controller develops against the explicit stability boundary.
        double e_n = std::max(err_norm, 1e-10);
        double fac = 0.9 * std::pow(e_n, -0.7 / 5.0) * std::pow(last_err, 0.4 / 5.0);
        last_err = e_n;
        dt = std::min(max_dt, dt * std::min(2.0, std::max(0.2, fac)));
    }
    return traj;
}

double energy_identity_residual(const Trajectory& traj) {
    if (traj.samples.empty()) return 0.0;
    const double g0 = traj.samples.front().G;
    const double scale = std::max(std::abs(g0), 1e-300);
    double worst = 0.0;
    for (const auto& s : traj.samples) {
        worst = std::max(worst, std::abs(s.G - g0 + 2.0 * s.dissipation_integral));
    }
    return worst / scale;
}

DecayFit decay_fit(const Trajectory& traj, const Projections& proj, double /*alpha*/) {
    const std::size_t n = traj.samples.size();
    if (n < 8) throw FitUnreliable("too few samples for a tail fit");
    if (!std::isfinite(traj.samples.front().norm_P_alpha)) {
        throw FitUnreliable("trajectory was integrated without projections");
    }

    // tail window: last 50% of samples after discarding the first 20%
    const std::size_t lo = n - (n - static_cast<std::size_t>(0.2 * n)) / 2;
    DecayFit fit;
    fit.u_bar = Eigen::VectorXd::Zero(traj.states.front().size());
    std::size_t count = 0;
    for (std::size_t i = lo; i < n; ++i) {
        fit.u_bar += proj.Q * traj.states[i];
        ++count;
    }
    fit.u_bar /= static_cast<double>(count);
    const int N = static_cast<int>(fit.u_bar.size()) - 6;
    fit.r = fit.u_bar[N + 2];

    double ref = 0.0;
    for (const auto& s : traj.samples) ref = std::max(ref, s.norm_alpha);
    double pmax = 0.0;
    for (std::size_t i = lo; i < n; ++i) pmax = std::max(pmax, traj.samples[i].norm_P_alpha);
    if (pmax <= 1e-13 * std::max(ref, 1e-300)) {
        // kernel-only data: nothing decays, the state is its own limit
        fit.kernel_only = true;
        fit.kappa = std::numeric_limits<double>::quiet_NaN();
        fit.r_squared = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    fit.kernel_only = false;

    double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = lo; i < n; ++i) {
        double p = traj.samples[i].norm_P_alpha;
        if (p <= 1e-300) continue;
        pts.emplace_back(traj.samples[i].t, std::log(p));
    }
    if (pts.size() < 4) throw FitUnreliable("tail window too degenerate for a fit");
    for (auto& [x, yv] : pts) {
        sx += x;
        sy += yv;
        sxx += x * x;
        sxy += x * yv;
        m += 1.0;
    }
    const double denom = m * sxx - sx * sx;
    if (denom <= 0.0) throw FitUnreliable("degenerate time window");
    const double slope = (m * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / m;
    double ss_res = 0, ss_tot = 0, mean = sy / m;
    for (auto& [x, yv] : pts) {
        double e = yv - (intercept + slope * x);
        ss_res += e * e;
        ss_tot += (yv - mean) * (yv - mean);
    }
    fit.kappa = -slope;
    fit.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    if (fit.r_squared < 0.9) {
        throw FitUnreliable("tail is not exponential (R^2 = " + std::to_string(fit.r_squared) +
                            ")");
    }
    return fit;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << "t,c_norm,omega1,omega2,omega3,z1,z2,z3,G,E_F,Q1,Q2,Q3,dirichlet,constraint,"
           "norm_alpha,norm_P_alpha\n";
    char buf[64];
    auto put = [&](double v, bool last = false) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf << (last ? "\n" : ",");
    };
    for (const auto& s : traj.samples) {
        put(s.t);
        put(s.c_norm);
        put(s.omega[0]);
        put(s.omega[1]);
        put(s.omega[2]);
        put(s.z[0]);
        put(s.z[1]);
        put(s.z[2]);
        put(s.G);
        put(s.E_F);
        put(s.Q1);
        put(s.Q2);
        put(s.Q3);
        put(s.dirichlet);
        put(s.constraint);
        put(s.norm_alpha);
        put(s.norm_P_alpha, true);
    }
}

}  // namespace liquidtop
