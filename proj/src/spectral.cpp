#include "liquidtop/spectral.hpp"

#include "liquidtop/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace liquidtop {

SpectrumReport spectrum(const Eigen::MatrixXd& L, double tol) {
    if (L.rows() != L.cols()) throw DimensionMismatch("spectrum needs a square matrix");
    const int n = static_cast<int>(L.rows());

    Eigen::EigenSolver<Eigen::MatrixXd> es(L, /*computeEigenvectors=*/true);
    if (es.info() != Eigen::Success) throw EigensolverFailure("dense eigensolver did not converge");

    SpectrumReport rep;
    rep.norm_L = L.norm();
    rep.tol = tol;
    const double cut = tol * rep.norm_L;

    rep.eigenvalues.resize(n);
    for (int i = 0; i < n; ++i) rep.eigenvalues[i] = es.eigenvalues()[i];
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
              [](const std::complex<double>& a, const std::complex<double>& b) {
                  if (a.real() != b.real()) return a.real() < b.real();
                  return a.imag() < b.imag();
              });

    std::vector<int> kernel_idx;
    for (int i = 0; i < n; ++i) {
        if (std::abs(es.eigenvalues()[i]) < cut) kernel_idx.push_back(i);
    }
    rep.kernel_dim = static_cast<int>(kernel_idx.size());

    double min_re = std::numeric_limits<double>::infinity();
    bool imag_axis_hit = false;
    for (const auto& s : rep.eigenvalues) {
        if (std::abs(s) < cut) continue;
        min_re = std::min(min_re, s.real());
        if (std::abs(s.real()) < cut && std::abs(s.imag()) >= cut) imag_axis_hit = true;
    }
    rep.min_re_sigma1 = std::isfinite(min_re) ? min_re : 0.0;
    if (rep.min_re_sigma1 > 0.0) rep.gamma_gap = rep.min_re_sigma1;

    // Kernel basis: anchored on the exact vectors (0,e3,0), (0,0,e3) when the
    // detected dimension matches the analytic count of two.
    const int N = n - 6;
    if (rep.kernel_dim == 2 && N >= 0) {
        rep.kernel_basis = Eigen::MatrixXd::Zero(n, 2);
        rep.kernel_basis(N + 2, 0) = 1.0;
        rep.kernel_basis(N + 5, 1) = 1.0;
    } else {
        rep.kernel_basis = Eigen::MatrixXd::Zero(n, rep.kernel_dim);
        for (int j = 0; j < rep.kernel_dim; ++j) {
            rep.kernel_basis.col(j) = es.eigenvectors().col(kernel_idx[j]).real();
            double nrm = rep.kernel_basis.col(j).norm();
            if (nrm > 0) rep.kernel_basis.col(j) /= nrm;
        }
    }
    rep.kernel_residual_max = 0.0;
    for (int j = 0; j < rep.kernel_basis.cols(); ++j) {
        rep.kernel_residual_max =
            std::max(rep.kernel_residual_max, (L * rep.kernel_basis.col(j)).norm());
    }

    // H2 as a rank statement: zero is semi-simple iff rank(L) = n - kernel_dim.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(L);
    int rank = 0;
    for (int i = 0; i < n; ++i) {
        if (svd.singularValues()[i] > cut) ++rank;
    }
    rep.h1 = (rep.kernel_dim == 2);
    rep.h2 = (rank == n - rep.kernel_dim);
    rep.h3 = !imag_axis_hit;
    return rep;
}

Projections projections(const SpectrumReport& report, const Eigen::MatrixXd& L) {
    const int n = static_cast<int>(L.rows());
    const int m = report.kernel_dim;
    if (m < 1) throw DefectiveZeroEigenvalue("no kernel detected, projections undefined");
    if (!report.h2) {
        throw DefectiveZeroEigenvalue("zero eigenvalue carries a Jordan block (H2 fails)");
    }

    // Left kernel from the SVD of L: columns of U at the smallest singular values.
    Eigen::BDCSVD<Eigen::MatrixXd> svd(L, Eigen::ComputeFullU);
    Eigen::MatrixXd Y = svd.matrixU().rightCols(m);
    const Eigen::MatrixXd& R = report.kernel_basis;

    Eigen::MatrixXd G = Y.transpose() * R;  // m x m
    Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    if (!lu.isInvertible()) {
        throw DefectiveZeroEigenvalue("kernel and range are not transversal (H2 fails)");
    }
    Projections p;
    p.Q = R * lu.solve(Y.transpose());
    p.P = Eigen::MatrixXd::Identity(n, n) - p.Q;
    p.rank_Q = m;
    return p;
}

StokesEigs stokes_eigenpairs(const ReducedSystem& sys) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(sys.stiffness, sys.gram);
    if (ges.info() != Eigen::Success) {
        throw EigensolverFailure("generalized Stokes eigensolver did not converge");
    }
    return {ges.eigenvalues(), ges.eigenvectors()};
}

FractionalNorm::FractionalNorm(const ReducedSystem& sys, double alpha)
    : FractionalNorm(sys, stokes_eigenpairs(sys), alpha) {}

FractionalNorm::FractionalNorm(const ReducedSystem& sys, const StokesEigs& eigs, double alpha)
    : alpha_(alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw AlphaOutOfRange("alpha must lie in [0, 1]");
    const int N = sys.n_v, n = sys.n_total;
    Eigen::VectorXd w(N);
    for (int i = 0; i < N; ++i) {
        w[i] = std::pow(std::max(eigs.values[i], 0.0), 2.0 * alpha);
    }
    W_ = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd GV = sys.gram * eigs.vectors;  // V is gram-orthonormal
    W_.topLeftCorner(N, N) = GV * w.asDiagonal() * GV.transpose();
    W_.block(N, N, 3, 3) = sys.inertia_diag().asDiagonal();
    W_.block(N + 3, N + 3, 3, 3) = Eigen::Matrix3d::Identity();
}

double FractionalNorm::operator()(const Eigen::VectorXd& u) const {
    return std::sqrt(std::max(u.dot(W_ * u), 0.0));
}

double fractional_norm(const ReducedSystem& sys, const Eigen::VectorXd& u, double alpha) {
    return FractionalNorm(sys, alpha)(u);
}

HypothesisReport verify_hypotheses(const ReducedSystem& sys, const SpectrumReport& report) {
    HypothesisReport h;
    h.h1 = report.h1;
    h.h2 = report.h2;
    h.h3 = report.h3;
    h.kernel_dim = report.kernel_dim;

    Eigen::MatrixXd L = generator(sys);
    h.kernel_residual_max = std::max((L * sys.kernel_vector_omega()).norm(),
                                     (L * sys.kernel_vector_z()).norm());
    const double cut = report.tol * report.norm_L;
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& s : report.eigenvalues) {
        if (std::abs(s.imag()) >= cut) margin = std::min(margin, std::abs(s.real()));
    }
    h.imag_axis_margin = std::isfinite(margin) ? margin : 0.0;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(L);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()[i] > cut) ++rank;
    }
    h.rank_defect = sys.n_total - rank;
    return h;
}

std::string spectrum_report_json(const SpectrumReport& report) {
    std::ostringstream os;
    os.setf(std::ios::scientific);
    os.precision(16);
    os << "{\"eigenvalues\":[";
    for (std::size_t i = 0; i < report.eigenvalues.size(); ++i) {
        if (i) os << ",";
        os << "[" << report.eigenvalues[i].real() << "," << report.eigenvalues[i].imag() << "]";
    }
    os << "],\"kernel_dim\":" << report.kernel_dim;
    os << ",\"min_re_sigma1\":" << report.min_re_sigma1;
    os << ",\"flags\":{\"H1\":" << (report.h1 ? "true" : "false")
       << ",\"H2\":" << (report.h2 ? "true" : "false")
       << ",\"H3\":" << (report.h3 ? "true" : "false") << "}";
    os << ",\"norm_L\":" << report.norm_L;
    os << ",\"kernel_residual_max\":" << report.kernel_residual_max << "}";
    return os.str();
}

}  // namespace liquidtop
