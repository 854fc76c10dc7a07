#pragma once

#include "liquidtop/operators.hpp"
#include "liquidtop/spectral.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace liquidtop {

/// Galerkin coefficients of v plus the rigid perturbation (omega, z).
struct PerturbationState {
    Eigen::VectorXd c;
    Eigen::Vector3d omega;
    Eigen::Vector3d z;
    double t = 0.0;

    Eigen::VectorXd flat() const;
    static PerturbationState from_flat(const Eigen::VectorXd& u, double t = 0.0);
};

/// z(0) on the admissible manifold: gamma = -e3 rotated toward `direction`
/// until |z| = magnitude, z = gamma + e3.  The constraint z.z - 2 z.e3 = 0
/// holds exactly.  Throws MagnitudeTooLarge for magnitude > 2.
Eigen::Vector3d admissible_z(const Eigen::Vector3d& direction, double magnitude);

/// z.z - 2 z.e3; conserved by the nonlinear flow.
double constraint_residual(const Eigen::Vector3d& z);
double constraint_residual(const Eigen::VectorXd& u);

/// Nearest admissible point with the same gravity direction: gamma = z - e3
/// renormalized to the unit sphere.  Used to correct O(delta^2) seeds.
Eigen::Vector3d project_to_constraint(const Eigen::Vector3d& z);

/// Quadratic forms Q1, Q2, Q3 of the tilt variables (omega* components vs z).
Eigen::Vector3d quadratic_forms(const BodyParams& p, const Eigen::Vector3d& omega_star,
                                const Eigen::Vector3d& z);

/// Lyapunov functional
///   G = c^T gram c - a.Ia + w*.Iw* + delta |z|^2 - 2 lambda z.Iw*
/// with a = -I^{-1} S c and w* = omega - a.
double lyapunov_g(const ReducedSystem& sys, const Eigen::VectorXd& u);

/// Fluid energy E_F = c^T gram c - a.Ia (>= kappa0 c^T gram c).
double fluid_energy(const ReducedSystem& sys, const Eigen::VectorXd& u);

/// State derivative: solves inertia * du/dt = -(stiffness_block+gyro_block) u
/// [+ nonlinear_rhs(u)] through a cached factorization.
class RhsEvaluator {
public:
    RhsEvaluator(const ReducedSystem& sys, bool linear_only);
    Eigen::VectorXd operator()(const Eigen::VectorXd& u) const;
    const ReducedSystem& system() const { return *sys_; }
    bool linear_only() const { return linear_; }

private:
    const ReducedSystem* sys_;
    Eigen::MatrixXd L_total_;   // stiffness_block + gyro_block
    Eigen::LLT<Eigen::MatrixXd> llt_;
    bool linear_;
};

Eigen::VectorXd rhs(const ReducedSystem& sys, const Eigen::VectorXd& u, bool linear_only);

struct IntegrateControls {
    double rtol = 1e-8;
    double atol = 1e-10;
    double dt_init = 0.0;      // 0 = automatic
    int samples = 401;
    bool linear_only = false;
    double alpha = 0.8;
    // Blow-up guard: abort (status Escaped) when ||u||_alpha exceeds
    // min(guard_factor * ||u0||_alpha, guard_abs).
    double guard_factor = 1e3;
    double guard_abs = std::numeric_limits<double>::infinity();
    // Escape detection: when finite, integration stops at the first crossing
    // of ||u||_alpha >= stop_norm and the time is refined via dense output.
    double stop_norm = std::numeric_limits<double>::infinity();
    const Projections* projections = nullptr;  // enables the P/Q monitors
};

struct TrajectorySample {
    double t;
    double c_norm;
    Eigen::Vector3d omega, z;
    double G, E_F, Q1, Q2, Q3;
    double dirichlet;          // c^T stiffness c
    double constraint;
    double norm_alpha;
    double norm_P_alpha;       // NaN when projections are absent
    double norm_Q;             // plain state norm of Qu; NaN when absent
    double dissipation_integral;  // int_0^t c^T stiffness c ds (integrator quadrature)
};

enum class TrajectoryStatus { Completed, Escaped };

struct Trajectory {
    std::vector<TrajectorySample> samples;
    std::vector<Eigen::VectorXd> states;   // flat state at each sample
    TrajectoryStatus status = TrajectoryStatus::Completed;
    double escape_time = std::numeric_limits<double>::quiet_NaN();
    bool guard_triggered = false;
    long accepted_steps = 0;
    long rejected_steps = 0;
    double initial_norm_alpha = 0.0;
};

/// Adaptive Dormand-Prince 5(4) integration of the reduced system with dense
/// output at uniform sample times.  The step size is capped by the stability
/// limit of the Stokes block.  Integration aborts cleanly (status Escaped)
/// when the blow-up guard trips; this signals instability, not failure.
/// Throws StepSizeUnderflow, NonFiniteState, InadmissibleInitialData.
Trajectory integrate(const ReducedSystem& sys, const PerturbationState& u0, double horizon,
                     const IntegrateControls& controls = {});

/// max_t |G(t) - G(0) + 2 int_0^t D| / max(|G(0)|, eps) over the samples of a
/// linear trajectory, D = c^T stiffness c.
double energy_identity_residual(const Trajectory& traj);

/// Exponential tail fit of the range component.
struct DecayFit {
    double kappa;      // decay rate of log ||P u||_alpha over the tail window
    double r;          // e3 spin component of the kernel limit
    Eigen::VectorXd u_bar;  // kernel limit (tail mean of Q u)
    double r_squared;
    bool kernel_only;  // trajectory had no measurable range component
};

/// Fit window: last 50% of samples after discarding the first 20%.
/// Throws FitUnreliable when R^2 < 0.9.
DecayFit decay_fit(const Trajectory& traj, const Projections& proj, double alpha);

/// Trajectory CSV: t, |c|, omega1..3, z1..3, G, E_F, Q1, Q2, Q3, dirichlet,
/// constraint, norm_alpha, norm_P_alpha (17 significant digits).
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace liquidtop
