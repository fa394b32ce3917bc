#include "ratecert/gauges.hpp"

#include <cmath>
#include <stdexcept>

#include "ratecert/common.hpp"
#include "ratecert/linalg.hpp"

namespace ratecert {

namespace {

void require_cone_vector(const Eigen::VectorXd& x, const char* who) {
  if (x.size() == 0) throw std::invalid_argument(std::string(who) + ": empty vector");
  const double top = x.maxCoeff();
  if (top <= 0.0) throw std::domain_error(std::string(who) + ": zero cone point");
  if (x.minCoeff() < -kZeroRel * top)
    throw std::domain_error(std::string(who) + ": point outside the cone");
}

}  // namespace

double gauge_M_standard(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  require_cone_vector(x, "gauge_M");
  require_cone_vector(y, "gauge_M");
  const double xtop = x.maxCoeff();
  double best = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    const double xi = std::max(x[i], 0.0), yi = std::max(y[i], 0.0);
    if (xi <= kZeroRel * xtop) {
      if (yi > kZeroRel * y.maxCoeff()) return kInf;
      continue;  // 0/0 imposes no constraint
    }
    best = std::max(best, yi / xi);
  }
  return best;
}

double gauge_m_standard(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  require_cone_vector(x, "gauge_m");
  require_cone_vector(y, "gauge_m");
  const double xtop = x.maxCoeff();
  double best = kInf;
  for (int i = 0; i < x.size(); ++i) {
    const double xi = std::max(x[i], 0.0), yi = std::max(y[i], 0.0);
    if (xi <= kZeroRel * xtop) continue;
    best = std::min(best, yi / xi);
  }
  return best;  // x nonzero, so some coordinate constrains
}

double gauge_M_psd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const SymEig ex = jacobi_eigen(x);
  const double xtop = ex.values.maxCoeff();
  if (xtop <= 0.0) throw std::domain_error("gauge_M: zero cone point");
  if (ex.values.minCoeff() < -kZeroRel * xtop)
    throw std::domain_error("gauge_M: point outside the cone");
  const SymEig ey = jacobi_eigen(y);
  const double ytop = ey.values.maxCoeff();
  if (ytop <= 0.0) throw std::domain_error("gauge_M: zero cone point");
  if (ey.values.minCoeff() < -kZeroRel * ytop)
    throw std::domain_error("gauge_M: point outside the cone");

  // lambda x >= y needs ker x contained in ker y.
  const double cutoff = kInteriorRel * xtop;
  for (int i = 0; i < ex.values.size(); ++i) {
    if (ex.values[i] > cutoff) continue;
    const Eigen::VectorXd v = ex.vectors.col(i);
    if (v.dot(y * v) > kInteriorRel * ytop) return kInf;
  }
  const Eigen::MatrixXd s = sym_pinv_sqrt(x, kInteriorRel);
  const SymEig ratio = jacobi_eigen(s * y * s);
  return std::max(ratio.values.maxCoeff(), 0.0);
}

double gauge_m_psd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  const double M = gauge_M_psd(y, x);  // m(y/x) = 1 / M(x/y)
  if (M == kInf) return 0.0;
  if (M <= 0.0) throw std::domain_error("gauge_m: zero cone point");
  return 1.0 / M;
}

bool standard_interior(const Eigen::VectorXd& x) {
  if (x.size() == 0) return false;
  const double top = x.maxCoeff();
  return top > 0.0 && x.minCoeff() > kInteriorRel * top;
}

bool psd_interior(const Eigen::MatrixXd& x) {
  if (x.rows() == 0 || x.rows() != x.cols()) return false;
  if ((x - x.transpose()).norm() > 1e-12 * std::max(1.0, x.norm())) return false;
  const SymEig e = jacobi_eigen(x);
  const double top = e.values.maxCoeff();
  return top > 0.0 && e.values.minCoeff() > kInteriorRel * top;
}

}  // namespace ratecert
