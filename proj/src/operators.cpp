#include "liquidtop/operators.hpp"

#include "liquidtop/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace liquidtop {

namespace {

Eigen::Matrix3d cross_matrix(const Eigen::Vector3d& v) {
    Eigen::Matrix3d m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

Eigen::MatrixXd to_eigen(const ExactMatrix& m, double scale) {
    Eigen::MatrixXd out(m.rows, m.cols);
    for (int i = 0; i < m.rows; ++i) {
        for (int j = 0; j < m.cols; ++j) out(i, j) = scale * to_double(m(i, j));
    }
    return out;
}

}  // namespace

Eigen::VectorXd ReducedSystem::kernel_vector_omega() const {
    Eigen::VectorXd k = Eigen::VectorXd::Zero(n_total);
    k[n_v + 2] = 1.0;
    return k;
}

Eigen::VectorXd ReducedSystem::kernel_vector_z() const {
    Eigen::VectorXd k = Eigen::VectorXd::Zero(n_total);
    k[n_v + 5] = 1.0;
    return k;
}

ReducedSystem assemble(const SolenoidalBasis& basis, const BodyParams& p) {
    const double hb = to_double(basis.h);
    if (std::abs(hb - p.cavity_scale) > 1e-12 * std::max(1.0, std::abs(hb))) {
        throw DimensionMismatch("basis cavity half-width does not match params.cavity_scale");
    }

    ReducedSystem sys;
    sys.params = p;
    sys.n_v = basis.size();
    sys.n_total = sys.n_v + 6;
    const int N = sys.n_v, n = sys.n_total;
    const double mu = p.rho * p.nu;

    sys.gram = to_eigen(basis.gram, p.rho);
    sys.stiffness = to_eigen(basis.stiffness, mu);
    sys.moment = to_eigen(basis.moment, p.rho);
    for (int i = 0; i < 3; ++i) sys.coriolis[i] = to_eigen(basis.coriolis[i], p.rho);
    sys.convective.resize(static_cast<std::size_t>(N) * N * N);
    for (std::size_t i = 0; i < sys.convective.size(); ++i) {
        sys.convective[i] = p.rho * to_double(basis.convective.a[i]);
    }

    const Eigen::Vector3d e3(0, 0, 1);
    const Eigen::Matrix3d e3x = cross_matrix(e3);
    const Eigen::Matrix3d Imat = sys.inertia_diag().asDiagonal();
    const double lam = p.lambda;

    // inertia: [[gram, S^T, 0], [S, diag(A,B,C), 0], [0, 0, I3]]
    sys.inertia = Eigen::MatrixXd::Zero(n, n);
    sys.inertia.topLeftCorner(N, N) = sys.gram;
    sys.inertia.block(0, N, N, 3) = sys.moment.transpose();
    sys.inertia.block(N, 0, 3, N) = sys.moment;
    sys.inertia.block(N, N, 3, 3) = Imat;
    sys.inertia.block(N + 3, N + 3, 3, 3) = Eigen::Matrix3d::Identity();

    Eigen::LLT<Eigen::MatrixXd> llt(sys.inertia);
    if (llt.info() != Eigen::Success) {
        throw InertiaNotPD("inertia block is not positive definite (params vs cavity)");
    }

    // stiffness block: Stokes stiffness on c, identity on omega and z
    sys.stiffness_block = Eigen::MatrixXd::Zero(n, n);
    sys.stiffness_block.topLeftCorner(N, N) = sys.stiffness;
    sys.stiffness_block.block(N, N, 6, 6) = Eigen::MatrixXd::Identity(6, 6);

    // gyro block; a = -I^{-1} S c eliminated analytically
    sys.gyro_block = Eigen::MatrixXd::Zero(n, n);
    sys.gyro_block.topLeftCorner(N, N) = -2.0 * lam * sys.coriolis[2];
    sys.gyro_block.block(N, 0, 3, N) = -lam * (e3x * sys.moment);
    sys.gyro_block.block(N, N, 3, 3) =
        -lam * (e3x * Imat) + lam * p.C * e3x - Eigen::Matrix3d::Identity();
    sys.gyro_block.block(N, N + 3, 3, 3) = -p.beta2 * e3x;
    sys.gyro_block.block(N + 3, N, 3, 3) = e3x;
    sys.gyro_block.block(N + 3, N + 3, 3, 3) = -lam * e3x - Eigen::Matrix3d::Identity();

    return sys;
}

Eigen::VectorXd nonlinear_rhs(const ReducedSystem& sys, const Eigen::VectorXd& u) {
    if (u.size() != sys.n_total) {
        throw DimensionMismatch("state dimension does not match the assembled system");
    }
    const int N = sys.n_v;
    const Eigen::VectorXd c = u.head(N);
    const Eigen::Vector3d omega = u.segment<3>(N);
    const Eigen::Vector3d z = u.segment<3>(N + 3);

    Eigen::VectorXd out = Eigen::VectorXd::Zero(sys.n_total);
    for (int i = 0; i < 3; ++i) out.head(N).noalias() -= 2.0 * omega[i] * (sys.coriolis[i] * c);
    using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                       Eigen::RowMajor>>;
    Eigen::VectorXd tc(N);
    for (int j = 0; j < N; ++j) {
        RowMajorMap Tj(sys.convective.data() + static_cast<std::size_t>(j) * N * N, N, N);
        tc.noalias() = Tj * c;
        out[j] -= c.dot(tc);
    }
    const Eigen::Vector3d angular = sys.inertia_diag().cwiseProduct(omega) + sys.moment * c;
    out.segment<3>(N) = -omega.cross(angular);
    out.segment<3>(N + 3) = -omega.cross(z);
    return out;
}

Eigen::MatrixXd generator(const ReducedSystem& sys) {
    Eigen::LLT<Eigen::MatrixXd> llt(sys.inertia);
    if (llt.info() != Eigen::Success) throw InertiaNotPD("inertia block failed factorization");
    return llt.solve(sys.stiffness_block + sys.gyro_block);
}

void dump_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    char buf[64];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out << buf << (j + 1 < m.cols() ? "," : "");
        }
        out << "\n";
    }
}

}  // namespace liquidtop
