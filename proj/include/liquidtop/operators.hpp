#pragma once

#include "liquidtop/basis.hpp"
#include "liquidtop/model.hpp"

#include <Eigen/Dense>

#include <array>
#include <string>
#include <vector>

namespace liquidtop {

/// Floating-point image of the reduced evolution system
///     inertia * du/dt + (stiffness_block + gyro_block) u = N(u)
/// on the state u = (c, omega, z) in R^{N+6}.
///
/// Block convention (row = test equation, column = unknown):
///   inertia:  [[gram, S^T, 0], [S, diag(A,B,C), 0], [0, 0, I3]]
///   stiffness_block: Stokes stiffness on c, identity on omega and z
///   gyro_block: rotation/gravity couplings (see assemble)
/// The moment coupling a = -I^{-1} S c is eliminated analytically.
struct ReducedSystem {
    int n_v = 0;       // Galerkin dimension N
    int n_total = 0;   // N + 6

    Eigen::MatrixXd inertia;          // symmetric positive definite
    Eigen::MatrixXd stiffness_block;
    Eigen::MatrixXd gyro_block;

    // Scaled tables for the quadratic terms and the norms.
    Eigen::MatrixXd gram;             // rho * int b.b
    Eigen::MatrixXd stiffness;        // rho*nu * int grad:grad
    Eigen::MatrixXd moment;           // 3 x N, rho * int (x cross b).e
    std::array<Eigen::MatrixXd, 3> coriolis;  // rho * int b.(e cross b)
    std::vector<double> convective;   // N^3 flat, rho * int b.(b.grad b)

    BodyParams params;

    double conv(int j, int k, int l) const {
        return convective[(static_cast<std::size_t>(j) * n_v + k) * n_v + l];
    }
    Eigen::Vector3d inertia_diag() const { return {params.A, params.B, params.C}; }

    /// Exact kernel vectors (0, e3, 0) and (0, 0, e3).
    Eigen::VectorXd kernel_vector_omega() const;
    Eigen::VectorXd kernel_vector_z() const;
};

/// Assembles the blocks from the exact tables.  Throws InertiaNotPD when the
/// inertia block fails its Cholesky factorization (params inconsistent with
/// the cavity).  Requires basis.h == params.cavity_scale.
ReducedSystem assemble(const SolenoidalBasis& basis, const BodyParams& p);

/// Quadratic right-hand side N(u) in test-function coordinates:
///   v-row[j]  = -2 sum_i w_i (R^i c)_j - sum_{k,l} T[j,k,l] c_k c_l
///   omega-row = -omega x (diag(A,B,C) omega + S c)
///   z-row     = -omega x z
/// Throws DimensionMismatch.
Eigen::VectorXd nonlinear_rhs(const ReducedSystem& sys, const Eigen::VectorXd& u);

/// Reduced generator L = inertia^{-1} (stiffness_block + gyro_block),
/// computed through a factorization of the inertia block.
Eigen::MatrixXd generator(const ReducedSystem& sys);

/// Debug dump of the assembled blocks (CSV, row-major, 17 significant digits).
void dump_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);

}  // namespace liquidtop
