#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "ratecert/common.hpp"

namespace ratecert {

enum class SpaceKind {
  StandardConeInterior,
  PsdConeInterior,
  RealVectorSpace,
  TorusTimesLine,
};

enum class MetricKind {
  NormSup,
  NormL2,
  Top,
  Bottom,
  Rfunk,
  RfunkPlus,
  Thompson,
  Hilbert,
  DeltaNu,
  Torus,
};

// Symmetric hemi-norm applied to the log-spectrum in delta_nu.
enum class NuKind { MaxAbs, Spread, Max, MaxPlus };

enum class GeodesicKind { StraightLine, ThompsonStraight, GeometricMean };

// p(z) = sup_{phi in E} phi(z) for a finite or structured dual set E.
// "bottom" uses E = {-e_i}, i.e. p(z) = max_i(-z_i), so that p stays
// subadditive; the min-form quantities are recovered by a sign flip.
class HemiNorm {
 public:
  enum class Kind { Sup, Top, Bottom, CustomFiniteE };

  static HemiNorm sup(int dim);
  static HemiNorm top(int dim);
  static HemiNorm bottom(int dim);
  static HemiNorm custom(const Eigen::MatrixXd& forms);  // rows are the phi

  double evaluate(const Eigen::VectorXd& z) const;
  std::vector<Eigen::VectorXd> extreme_forms() const;
  Kind kind() const { return kind_; }
  int dimension() const { return dim_; }

 private:
  HemiNorm(Kind kind, int dim, Eigen::MatrixXd forms)
      : kind_(kind), dim_(dim), forms_(std::move(forms)) {}
  Kind kind_;
  int dim_;
  Eigen::MatrixXd forms_;  // custom only
};

// A hemi-metric delta on one of the supported spaces. Points are packed as
// vectors: cone vectors and real vectors as themselves, PSD matrices
// column-major (length n*n), torus-times-line points as (x, t).
class HemiMetric {
 public:
  HemiMetric(SpaceKind space, MetricKind kind, int dimension,
             std::optional<NuKind> nu = std::nullopt);
  static HemiMetric custom_norm(const HemiNorm& norm);

  double delta(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
  // Associated metric d(x,y) = max(delta(x,y), delta(y,x)).
  double induced(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;

  bool symmetric_metric() const;  // delta(x,y) == delta(y,x) for all x,y
  bool nonnegative() const;       // delta >= 0 everywhere
  bool weakly_separating() const; // false for hilbert (vanishes on rays)

  SpaceKind space() const { return space_; }
  MetricKind kind() const { return kind_; }
  std::optional<NuKind> nu() const { return nu_; }
  const std::optional<HemiNorm>& custom() const { return custom_; }
  int dimension() const { return dim_; }
  Eigen::Index point_size() const;

  bool in_domain(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample_point(Rng& rng) const;

 private:
  SpaceKind space_;
  MetricKind kind_;
  int dim_;
  std::optional<NuKind> nu_;
  std::optional<HemiNorm> custom_;
};

// Family of geodesics gamma_y emanating from a common center, gamma_y(0) =
// center, gamma_y(1) = y, with delta(gamma_y(s), gamma_y(t)) =
// (t - s) delta(center, y) for 0 <= s <= t <= 1.
class GeodesicFamily {
 public:
  GeodesicFamily(GeodesicKind kind, HemiMetric metric, Eigen::VectorXd center);

  Eigen::VectorXd point_at(const Eigen::VectorXd& y, double s) const;

  GeodesicKind kind() const { return kind_; }
  const HemiMetric& metric() const { return metric_; }
  const Eigen::VectorXd& center() const { return center_; }

 private:
  GeodesicKind kind_;
  HemiMetric metric_;
  Eigen::VectorXd center_;
};

// Sampled checks. Each draws `plan.count` instances from the metric's
// sampler and records violations beyond plan.tol.
ViolationReport check_triangle(const HemiMetric& m, const SamplePlan& plan);
ViolationReport check_separation(const HemiMetric& m, const SamplePlan& plan);
ViolationReport check_geodesic_identity(const GeodesicFamily& g, const SamplePlan& plan);
// Convexity along the family: delta(gamma_y(s), gamma_z(s)) <= s delta(y, z).
ViolationReport check_star_shaped(const GeodesicFamily& g, const SamplePlan& plan);

std::string to_string(SpaceKind k);
std::string to_string(MetricKind k);
std::string to_string(NuKind k);
std::string to_string(GeodesicKind k);

}  // namespace ratecert
