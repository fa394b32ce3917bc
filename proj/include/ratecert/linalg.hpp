#pragma once

#include <Eigen/Dense>

namespace ratecert {

struct SymEig {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, orthonormal, sign-canonicalized
};

// Cyclic Jacobi eigendecomposition for symmetric matrices (desk scale,
// n <= 16). Off-diagonal Frobenius norm is driven below 1e-13 times the
// matrix Frobenius norm, at most 100 sweeps.
SymEig jacobi_eigen(const Eigen::MatrixXd& a);

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a);
Eigen::MatrixXd sym_inverse(const Eigen::MatrixXd& a);
// Moore-Penrose pseudo-inverse square root; eigenvalues below
// cutoff_rel * lambda_max are treated as zero.
Eigen::MatrixXd sym_pinv_sqrt(const Eigen::MatrixXd& a, double cutoff_rel = 1e-10);
// Fractional power of a positive semidefinite matrix; small negative
// rounding eigenvalues are clamped to zero.
Eigen::MatrixXd sym_pow(const Eigen::MatrixXd& a, double s);

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

// Column-major full packing of an n x n matrix into a length n*n vector.
Eigen::VectorXd pack_square(const Eigen::MatrixXd& a);
Eigen::MatrixXd unpack_square(const Eigen::VectorXd& v);

}  // namespace ratecert
