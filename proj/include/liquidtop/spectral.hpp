#pragma once

#include "liquidtop/operators.hpp"

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace liquidtop {

/// Full eigenstructure of the reduced generator L.
///
/// Sign convention: the evolution is du/dt + L u = N(u), so eigenvalues of L
/// with positive real part decay.  min_re_sigma1 is the smallest real part
/// over sigma(L) \ {0}; the motion is linearly stable iff it is positive.
struct SpectrumReport {
    std::vector<std::complex<double>> eigenvalues;  // sorted by (Re, Im)
    int kernel_dim = 0;
    Eigen::MatrixXd kernel_basis;   // n x kernel_dim
    double min_re_sigma1 = 0.0;
    std::optional<double> gamma_gap;  // min_re_sigma1 when positive
    bool h1 = false;   // kernel_dim == 2
    bool h2 = false;   // rank(L) == n - kernel_dim (zero is semi-simple)
    bool h3 = false;   // no nonzero purely imaginary eigenvalue
    double norm_L = 0.0;            // Frobenius norm used for thresholds
    double tol = 0.0;
    double kernel_residual_max = 0.0;  // max ||L k_i|| over the exact kernel vectors
};

/// Dense nonsymmetric eigensolve with kernel detection at |sigma| < tol*||L||.
/// The analytic kernel vectors (0,e3,0), (0,0,e3) anchor the kernel basis
/// whenever the detected dimension is 2.
SpectrumReport spectrum(const Eigen::MatrixXd& L, double tol = 1e-9);

/// Spectral projections onto N[L] (Q) and R[L] (P = Id - Q), built from right
/// and left kernel vectors with biorthogonal normalization.
/// Throws DefectiveZeroEigenvalue when the zero eigenvalue is not semi-simple.
struct Projections {
    Eigen::MatrixXd Q, P;
    int rank_Q = 0;
};

Projections projections(const SpectrumReport& report, const Eigen::MatrixXd& L);

/// Symmetric generalized Stokes eigenpairs (stiffness vs gram) of the v-block,
/// the backbone of the fractional norms; eigenvectors are gram-orthonormal.
struct StokesEigs {
    Eigen::VectorXd values;     // ascending, > 0
    Eigen::MatrixXd vectors;    // V with V^T gram V = Id
};

StokesEigs stokes_eigenpairs(const ReducedSystem& sys);

/// Norm ||u||_alpha with the Stokes block raised to the power alpha on the
/// velocity part and the inertia-weighted Euclidean norm on (omega, z):
///   ||u||_a^2 = sum_m s_m^{2a} (psi_m^T gram c)^2 + w.Iw + |z|^2.
/// alpha = 0 gives the plain state-space norm.
class FractionalNorm {
public:
    FractionalNorm(const ReducedSystem& sys, double alpha);
    FractionalNorm(const ReducedSystem& sys, const StokesEigs& eigs, double alpha);

    double operator()(const Eigen::VectorXd& u) const;
    const Eigen::MatrixXd& weight() const { return W_; }
    double alpha() const { return alpha_; }

private:
    Eigen::MatrixXd W_;   // (N+6) x (N+6) SPD weight
    double alpha_;
};

/// One-shot ||u||_alpha.  Throws AlphaOutOfRange unless 0 <= alpha <= 1.
double fractional_norm(const ReducedSystem& sys, const Eigen::VectorXd& u, double alpha);

/// Structured hypothesis verification with measured residuals.
struct HypothesisReport {
    bool h1 = false, h2 = false, h3 = false;
    int kernel_dim = 0;
    int rank_defect = 0;               // n - rank(L)
    double kernel_residual_max = 0.0;
    double imag_axis_margin = 0.0;     // min |Re s| over eigenvalues with |Im s| > tol
    bool all() const { return h1 && h2 && h3; }
};

HypothesisReport verify_hypotheses(const ReducedSystem& sys, const SpectrumReport& report);

/// JSON encoding of a SpectrumReport:
/// {eigenvalues: [[re,im]...], kernel_dim, min_re_sigma1, flags}.
std::string spectrum_report_json(const SpectrumReport& report);

}  // namespace liquidtop
