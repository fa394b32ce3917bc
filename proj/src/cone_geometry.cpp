#include "ratecert/cone_geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "ratecert/gauges.hpp"
#include "ratecert/linalg.hpp"

namespace ratecert {

ConePoint ConePoint::standard(Eigen::VectorXd v) {
  if (v.size() == 0) throw std::invalid_argument("ConePoint: empty vector");
  ConePoint p;
  p.kind_ = ConeKind::Standard;
  p.dim_ = static_cast<int>(v.size());
  const double top = v.cwiseAbs().maxCoeff();
  if (v.minCoeff() < -kZeroRel * std::max(top, 1.0))
    throw std::domain_error("ConePoint: negative coordinate");
  for (int i = 0; i < v.size(); ++i) v[i] = std::max(v[i], 0.0);
  p.vec_ = std::move(v);
  p.scale_ = p.vec_.maxCoeff();
  if (p.scale_ <= 0.0)
    p.class_ = PointClass::Zero;
  else if (p.vec_.minCoeff() > kInteriorRel * p.scale_)
    p.class_ = PointClass::Interior;
  else
    p.class_ = PointClass::Boundary;
  return p;
}

ConePoint ConePoint::psd(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw std::invalid_argument("ConePoint: matrix must be square");
  if ((m - m.transpose()).norm() > 1e-12 * std::max(1.0, m.norm()))
    throw std::domain_error("ConePoint: matrix is not symmetric");
  ConePoint p;
  p.kind_ = ConeKind::Psd;
  p.dim_ = static_cast<int>(m.rows());
  p.mat_ = symmetrize(m);
  const SymEig e = jacobi_eigen(p.mat_);
  const double top = e.values.cwiseAbs().maxCoeff();
  if (e.values.minCoeff() < -kInteriorRel * std::max(top, 1e-300))
    throw std::domain_error("ConePoint: matrix has a negative eigenvalue");
  p.scale_ = std::max(e.values.maxCoeff(), 0.0);
  if (p.scale_ <= 0.0)
    p.class_ = PointClass::Zero;
  else if (e.values.minCoeff() > kInteriorRel * p.scale_)
    p.class_ = PointClass::Interior;
  else
    p.class_ = PointClass::Boundary;
  return p;
}

ConePoint ConePoint::from_packed(ConeKind kind, const Eigen::VectorXd& packed) {
  if (kind == ConeKind::Standard) return standard(packed);
  return psd(unpack_square(packed));
}

const Eigen::VectorXd& ConePoint::vec() const {
  if (kind_ != ConeKind::Standard)
    throw std::logic_error("ConePoint: vec() on a PSD point");
  return vec_;
}

const Eigen::MatrixXd& ConePoint::mat() const {
  if (kind_ != ConeKind::Psd)
    throw std::logic_error("ConePoint: mat() on a standard-cone point");
  return mat_;
}

Eigen::VectorXd ConePoint::packed() const {
  return kind_ == ConeKind::Standard ? vec_ : pack_square(mat_);
}

namespace {

void require_same_cone(const ConePoint& x, const ConePoint& y, const char* who) {
  if (x.cone() != y.cone() || x.dim() != y.dim())
    throw std::invalid_argument(std::string(who) + ": points from different cones");
  if (x.zero() || y.zero())
    throw std::domain_error(std::string(who) + ": gauge of the zero point");
}

}  // namespace

double gauge_M(const ConePoint& x, const ConePoint& y) {
  require_same_cone(x, y, "gauge_M");
  return x.cone() == ConeKind::Standard ? gauge_M_standard(x.vec(), y.vec())
                                        : gauge_M_psd(x.mat(), y.mat());
}

double gauge_m(const ConePoint& x, const ConePoint& y) {
  require_same_cone(x, y, "gauge_m");
  return x.cone() == ConeKind::Standard ? gauge_m_standard(x.vec(), y.vec())
                                        : gauge_m_psd(x.mat(), y.mat());
}

double ExtremeRay::pair(const ConePoint& p) const {
  if (cone != p.cone())
    throw std::invalid_argument("ExtremeRay: cone mismatch");
  if (cone == ConeKind::Standard) return p.vec()[index];
  return direction.dot(p.mat() * direction);
}

ExtremeRay maximizing_extreme_ray(const ConePoint& x, const ConePoint& y) {
  require_same_cone(x, y, "maximizing_extreme_ray");
  if (!x.interior())
    throw std::domain_error("maximizing_extreme_ray: x must be interior");
  ExtremeRay ray;
  ray.cone = x.cone();
  if (x.cone() == ConeKind::Standard) {
    const Eigen::VectorXd& xv = x.vec();
    const Eigen::VectorXd& yv = y.vec();
    int best = 0;
    double best_ratio = yv[0] / xv[0];
    for (int i = 1; i < xv.size(); ++i) {
      const double r = yv[i] / xv[i];
      if (r > best_ratio * (1.0 + 1e-15)) {
        best = i;
        best_ratio = r;
      }
    }
    ray.index = best;
    ray.direction = Eigen::VectorXd::Unit(x.dim(), best);
    return ray;
  }
  const Eigen::MatrixXd s = sym_pinv_sqrt(x.mat(), kInteriorRel);
  const SymEig e = jacobi_eigen(symmetrize(s * y.mat() * s));
  const int n = x.dim();
  const double top = e.values[n - 1];
  // Tie break: among (numerically) top eigenvectors take the
  // lexicographically smallest sign-canonicalized one.
  int pick = n - 1;
  for (int j = n - 2; j >= 0; --j) {
    if (e.values[j] < top - 1e-12 * std::max(std::abs(top), 1.0)) break;
    const Eigen::VectorXd& a = e.vectors.col(j);
    const Eigen::VectorXd& b = e.vectors.col(pick);
    for (int i = 0; i < n; ++i) {
      if (a[i] == b[i]) continue;
      if (a[i] < b[i]) pick = j;
      break;
    }
  }
  Eigen::VectorXd q = s * e.vectors.col(pick);
  const double norm = q.norm();
  if (norm <= 0.0) throw std::runtime_error("maximizing_extreme_ray: degenerate ray");
  q /= norm;
  for (int i = 0; i < n; ++i) {
    if (std::abs(q[i]) > 1e-12) {
      if (q[i] < 0.0) q = -q;
      break;
    }
  }
  ray.direction = q;
  return ray;
}

namespace {

// log M(u/x) with the convention log(+inf) = +inf, log 0 = -inf.
double log_gauge_M(const ConePoint& x, const ConePoint& u) {
  const double g = gauge_M(x, u);
  if (g == kInf) return kInf;
  if (g <= 0.0) return -kInf;
  return std::log(g);
}

}  // namespace

ConeMartinFunction::ConeMartinFunction(MartinVariant variant, ConePoint u,
                                       ConePoint basepoint)
    : variant_(variant), u_(std::move(u)), basepoint_(std::move(basepoint)) {
  if (u_.zero())
    throw std::domain_error("ConeMartinFunction: direction must be nonzero");
  if (!basepoint_.interior())
    throw std::domain_error("ConeMartinFunction: basepoint must be interior");
  if (u_.cone() != basepoint_.cone() || u_.dim() != basepoint_.dim())
    throw std::invalid_argument("ConeMartinFunction: cone mismatch");
  horofunction_ = u_.classification() == PointClass::Boundary;
}

double ConeMartinFunction::value(const ConePoint& x) const {
  double dxu = log_gauge_M(x, u_);
  double dbu = log_gauge_M(basepoint_, u_);
  if (variant_ == MartinVariant::RfunkPlus) {
    dxu = std::max(dxu, 0.0);
    dbu = std::max(dbu, 0.0);
  }
  if (dxu == kInf) return -kInf;
  return -dxu + dbu;
}

double martin_value(const ConeMartinFunction& h, const ConePoint& x) {
  return h.value(x);
}

}  // namespace ratecert
