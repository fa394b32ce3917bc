#pragma once

#include <Eigen/Dense>

#include "ratecert/hemi_core.hpp"

namespace ratecert {

enum class ConeKind { Standard, Psd };
enum class PointClass { Zero, Boundary, Interior };

// A point of a closed symmetric cone (standard orthant or PSD matrices),
// boundary allowed.
class ConePoint {
 public:
  static ConePoint standard(Eigen::VectorXd v);
  static ConePoint psd(const Eigen::MatrixXd& m);
  static ConePoint from_packed(ConeKind kind, const Eigen::VectorXd& packed);

  ConeKind cone() const { return kind_; }
  int dim() const { return dim_; }
  PointClass classification() const { return class_; }
  bool interior() const { return class_ == PointClass::Interior; }
  bool zero() const { return class_ == PointClass::Zero; }

  const Eigen::VectorXd& vec() const;
  const Eigen::MatrixXd& mat() const;
  Eigen::VectorXd packed() const;
  double scale() const { return scale_; }  // max coordinate / max eigenvalue

 private:
  ConeKind kind_ = ConeKind::Standard;
  int dim_ = 0;
  PointClass class_ = PointClass::Zero;
  double scale_ = 0.0;
  Eigen::VectorXd vec_;
  Eigen::MatrixXd mat_;
};

// M(y/x) = inf{lambda > 0 : lambda x >= y}; +inf when no lambda works.
double gauge_M(const ConePoint& x, const ConePoint& y);
// m(y/x) = sup{lambda > 0 : lambda x <= y} = 1 / M(x/y).
double gauge_m(const ConePoint& x, const ConePoint& y);

// An extreme ray phi of the dual cone, normalized; phi(p) = pair(p).
// Standard cone: a coordinate form e_index. PSD cone: u u^T for a unit u.
struct ExtremeRay {
  ConeKind cone = ConeKind::Standard;
  int index = -1;               // standard only
  Eigen::VectorXd direction;    // unit vector (both kinds)
  double pair(const ConePoint& p) const;
};

// The extreme ray attaining sup phi(y)/phi(x) = M(y/x); x must be interior.
// Ties resolve to the lowest coordinate index / the lexicographically
// smallest sign-canonicalized eigenvector.
ExtremeRay maximizing_extreme_ray(const ConePoint& x, const ConePoint& y);

enum class MartinVariant { Rfunk, RfunkPlus };

// Martin / horofunction form h(x) = -delta(x, u) + delta(basepoint, u) with
// delta = rfunk or rfunk-plus gauge distance toward a direction u != 0.
class ConeMartinFunction {
 public:
  ConeMartinFunction(MartinVariant variant, ConePoint u, ConePoint basepoint);

  double value(const ConePoint& x) const;
  bool horofunction() const { return horofunction_; }
  MartinVariant variant() const { return variant_; }
  const ConePoint& direction() const { return u_; }
  const ConePoint& basepoint() const { return basepoint_; }

 private:
  MartinVariant variant_;
  ConePoint u_;
  ConePoint basepoint_;
  bool horofunction_;
};

double martin_value(const ConeMartinFunction& h, const ConePoint& x);

}  // namespace ratecert
