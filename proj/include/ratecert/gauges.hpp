#pragma once

#include <Eigen/Dense>

namespace ratecert {

// Order-unit gauges on the standard cone R^n_+ and on the PSD cone.
//
//   M(y/x) = inf{ lambda > 0 : lambda x >= y }   (+inf when empty)
//   m(y/x) = sup{ lambda > 0 : lambda x <= y }
//
// Boundary points are allowed. On the standard cone a coordinate with
// x_i = 0, y_i > 0 makes M infinite; coordinates outside the support of x
// impose no constraint on m. On the PSD cone the boundary case goes through
// the Moore-Penrose pseudo-inverse square root and M is infinite unless
// ker X is contained in ker Y.

double gauge_M_standard(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
double gauge_m_standard(const Eigen::VectorXd& x, const Eigen::VectorXd& y);
double gauge_M_psd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
double gauge_m_psd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// Classification thresholds shared across the library.
inline constexpr double kInteriorRel = 1e-10;  // min eig > kInteriorRel * max eig
inline constexpr double kZeroRel = 1e-12;

bool standard_interior(const Eigen::VectorXd& x);
bool psd_interior(const Eigen::MatrixXd& x);

}  // namespace ratecert
