#include "ratecert/hemi_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ratecert/gauges.hpp"
#include "ratecert/linalg.hpp"

namespace ratecert {

namespace {

double wrap01(double x) {
  double f = x - std::floor(x);
  if (f >= 1.0) f -= 1.0;
  return f;
}

// Signed circle difference in (-1/2, 1/2].
double circle_diff(double a, double b) {
  double d = wrap01(a - b);
  if (d > 0.5) d -= 1.0;
  return d;
}

double torus_delta(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double f = std::abs(circle_diff(y[0], x[0]));
  return f + std::abs(y[1] - x[1]);
}

double nu_of(NuKind nu, const Eigen::VectorXd& logs) {
  const double mx = logs.maxCoeff();
  const double mn = logs.minCoeff();
  switch (nu) {
    case NuKind::MaxAbs: return std::max(std::abs(mx), std::abs(mn));
    case NuKind::Spread: return mx - mn;
    case NuKind::Max: return mx;
    case NuKind::MaxPlus: return std::max(mx, 0.0);
  }
  throw std::logic_error("nu_of: unreachable");
}

}  // namespace

HemiNorm HemiNorm::sup(int dim) { return HemiNorm(Kind::Sup, dim, {}); }
HemiNorm HemiNorm::top(int dim) { return HemiNorm(Kind::Top, dim, {}); }
HemiNorm HemiNorm::bottom(int dim) { return HemiNorm(Kind::Bottom, dim, {}); }

HemiNorm HemiNorm::custom(const Eigen::MatrixXd& forms) {
  if (forms.rows() == 0) throw std::invalid_argument("HemiNorm: empty dual set");
  const int dim = static_cast<int>(forms.cols());
  // Weak separation needs span(E) = R^n.
  const SymEig gram = jacobi_eigen(forms.transpose() * forms);
  const double top = gram.values.maxCoeff();
  int rank = 0;
  for (int i = 0; i < gram.values.size(); ++i)
    if (gram.values[i] > 1e-12 * std::max(top, 1e-300)) ++rank;
  if (rank < dim)
    throw std::invalid_argument("HemiNorm: dual set does not span, separation fails");
  return HemiNorm(Kind::CustomFiniteE, dim, forms);
}

double HemiNorm::evaluate(const Eigen::VectorXd& z) const {
  if (z.size() != dim_) throw std::invalid_argument("HemiNorm: dimension mismatch");
  switch (kind_) {
    case Kind::Sup: return z.cwiseAbs().maxCoeff();
    case Kind::Top: return z.maxCoeff();
    case Kind::Bottom: return (-z).maxCoeff();
    case Kind::CustomFiniteE: return (forms_ * z).maxCoeff();
  }
  throw std::logic_error("HemiNorm: unreachable");
}

std::vector<Eigen::VectorXd> HemiNorm::extreme_forms() const {
  std::vector<Eigen::VectorXd> out;
  switch (kind_) {
    case Kind::Sup:
      for (int i = 0; i < dim_; ++i) {
        out.push_back(Eigen::VectorXd::Unit(dim_, i));
        out.push_back(-Eigen::VectorXd::Unit(dim_, i));
      }
      break;
    case Kind::Top:
      for (int i = 0; i < dim_; ++i) out.push_back(Eigen::VectorXd::Unit(dim_, i));
      break;
    case Kind::Bottom:
      for (int i = 0; i < dim_; ++i) out.push_back(-Eigen::VectorXd::Unit(dim_, i));
      break;
    case Kind::CustomFiniteE:
      for (int r = 0; r < forms_.rows(); ++r) out.push_back(forms_.row(r).transpose());
      break;
  }
  return out;
}

HemiMetric::HemiMetric(SpaceKind space, MetricKind kind, int dimension,
                       std::optional<NuKind> nu)
    : space_(space), kind_(kind), dim_(dimension), nu_(nu) {
  if (dimension < 1) throw std::invalid_argument("HemiMetric: dimension < 1");
  const bool cone = space == SpaceKind::StandardConeInterior ||
                    space == SpaceKind::PsdConeInterior;
  switch (kind) {
    case MetricKind::Rfunk:
    case MetricKind::RfunkPlus:
    case MetricKind::Thompson:
    case MetricKind::Hilbert:
      if (!cone) throw std::invalid_argument("HemiMetric: cone metric on non-cone space");
      break;
    case MetricKind::DeltaNu:
      if (!cone) throw std::invalid_argument("HemiMetric: cone metric on non-cone space");
      if (!nu) throw std::invalid_argument("HemiMetric: delta-nu needs a nu descriptor");
      break;
    case MetricKind::NormSup:
    case MetricKind::NormL2:
    case MetricKind::Top:
    case MetricKind::Bottom:
      if (space != SpaceKind::RealVectorSpace)
        throw std::invalid_argument("HemiMetric: norm metric needs a vector space");
      break;
    case MetricKind::Torus:
      if (space != SpaceKind::TorusTimesLine || dimension != 2)
        throw std::invalid_argument("HemiMetric: torus metric is for torus-times-line, dim 2");
      break;
  }
  if (kind != MetricKind::DeltaNu && nu)
    throw std::invalid_argument("HemiMetric: nu given for a non-delta-nu metric");
}

HemiMetric HemiMetric::custom_norm(const HemiNorm& norm) {
  HemiMetric m(SpaceKind::RealVectorSpace,
               norm.kind() == HemiNorm::Kind::Sup      ? MetricKind::NormSup
               : norm.kind() == HemiNorm::Kind::Bottom ? MetricKind::Bottom
                                                       : MetricKind::Top,
               norm.dimension());
  if (norm.kind() == HemiNorm::Kind::CustomFiniteE) m.custom_ = norm;
  return m;
}

Eigen::Index HemiMetric::point_size() const {
  switch (space_) {
    case SpaceKind::PsdConeInterior: return Eigen::Index(dim_) * dim_;
    case SpaceKind::TorusTimesLine: return 2;
    default: return dim_;
  }
}

bool HemiMetric::in_domain(const Eigen::VectorXd& x) const {
  if (x.size() != point_size()) return false;
  switch (space_) {
    case SpaceKind::StandardConeInterior: return standard_interior(x);
    case SpaceKind::PsdConeInterior: return psd_interior(unpack_square(x));
    default: return true;
  }
}

namespace {

void require_domain(const HemiMetric& m, const Eigen::VectorXd& x) {
  if (!m.in_domain(x))
    throw std::domain_error("HemiMetric: point outside the space domain");
}

}  // namespace

double HemiMetric::delta(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  require_domain(*this, x);
  require_domain(*this, y);
  const bool std_cone = space_ == SpaceKind::StandardConeInterior;
  switch (kind_) {
    case MetricKind::NormSup:
    case MetricKind::Top:
    case MetricKind::Bottom: {
      if (custom_) return custom_->evaluate(y - x);
      if (kind_ == MetricKind::NormSup) return (y - x).cwiseAbs().maxCoeff();
      if (kind_ == MetricKind::Top) return (y - x).maxCoeff();
      return (x - y).maxCoeff();
    }
    case MetricKind::NormL2:
      return (y - x).norm();
    case MetricKind::Torus:
      return torus_delta(x, y);
    case MetricKind::Rfunk:
    case MetricKind::RfunkPlus:
    case MetricKind::Thompson:
    case MetricKind::Hilbert: {
      const double fwd = std_cone
                             ? std::log(gauge_M_standard(x, y))
                             : std::log(gauge_M_psd(unpack_square(x), unpack_square(y)));
      if (kind_ == MetricKind::Rfunk) return fwd;
      if (kind_ == MetricKind::RfunkPlus) return std::max(fwd, 0.0);
      const double bwd = std_cone
                             ? std::log(gauge_M_standard(y, x))
                             : std::log(gauge_M_psd(unpack_square(y), unpack_square(x)));
      return kind_ == MetricKind::Thompson ? std::max(fwd, bwd) : fwd + bwd;
    }
    case MetricKind::DeltaNu: {
      Eigen::VectorXd logs(dim_);
      if (std_cone) {
        for (int i = 0; i < dim_; ++i) logs[i] = std::log(y[i] / x[i]);
      } else {
        const Eigen::MatrixXd s = sym_pinv_sqrt(unpack_square(x), kInteriorRel);
        const SymEig e = jacobi_eigen(s * unpack_square(y) * s);
        for (int i = 0; i < dim_; ++i) logs[i] = std::log(e.values[i]);
      }
      return nu_of(*nu_, logs);
    }
  }
  throw std::logic_error("HemiMetric: unreachable");
}

double HemiMetric::induced(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const {
  if (symmetric_metric()) return delta(x, y);
  return std::max(delta(x, y), delta(y, x));
}

bool HemiMetric::symmetric_metric() const {
  if (custom_) return false;  // not analyzed; induced() evaluates both ways
  switch (kind_) {
    case MetricKind::NormSup:
    case MetricKind::NormL2:
    case MetricKind::Torus:
    case MetricKind::Thompson:
    case MetricKind::Hilbert:
      return true;
    case MetricKind::DeltaNu:
      return *nu_ == NuKind::MaxAbs || *nu_ == NuKind::Spread;
    default:
      return false;
  }
}

bool HemiMetric::nonnegative() const {
  if (custom_) return false;  // a general finite E admits negative values
  switch (kind_) {
    case MetricKind::NormSup:
    case MetricKind::NormL2:
    case MetricKind::Torus:
    case MetricKind::Thompson:
    case MetricKind::Hilbert:
    case MetricKind::RfunkPlus:
      return true;
    case MetricKind::DeltaNu:
      return *nu_ != NuKind::Max;
    default:
      return false;
  }
}

bool HemiMetric::weakly_separating() const {
  if (kind_ == MetricKind::Hilbert) return false;
  if (kind_ == MetricKind::DeltaNu && *nu_ == NuKind::Spread) return false;
  return true;
}

Eigen::VectorXd HemiMetric::sample_point(Rng& rng) const {
  switch (space_) {
    case SpaceKind::StandardConeInterior: {
      Eigen::VectorXd x(dim_);
      for (int i = 0; i < dim_; ++i) x[i] = std::exp(rng.uniform(-3.0, 3.0));
      return x;
    }
    case SpaceKind::PsdConeInterior: {
      Eigen::MatrixXd g(dim_, dim_);
      for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) g(i, j) = rng.normal();
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
      Eigen::MatrixXd q = qr.householderQ();
      Eigen::VectorXd ev(dim_);
      for (int i = 0; i < dim_; ++i) ev[i] = std::exp(rng.uniform(-3.0, 3.0));
      return pack_square(symmetrize(q * ev.asDiagonal() * q.transpose()));
    }
    case SpaceKind::RealVectorSpace: {
      Eigen::VectorXd x(dim_);
      for (int i = 0; i < dim_; ++i) x[i] = rng.uniform(-5.0, 5.0);
      return x;
    }
    case SpaceKind::TorusTimesLine: {
      Eigen::VectorXd x(2);
      x[0] = rng.uniform01();
      x[1] = rng.uniform(-5.0, 5.0);
      return x;
    }
  }
  throw std::logic_error("HemiMetric: unreachable");
}

GeodesicFamily::GeodesicFamily(GeodesicKind kind, HemiMetric metric,
                               Eigen::VectorXd center)
    : kind_(kind), metric_(std::move(metric)), center_(std::move(center)) {
  const bool cone = metric_.space() == SpaceKind::StandardConeInterior ||
                    metric_.space() == SpaceKind::PsdConeInterior;
  if (kind == GeodesicKind::StraightLine && cone)
    throw std::invalid_argument("GeodesicFamily: straight-line is for vector/torus spaces");
  if (kind != GeodesicKind::StraightLine && !cone)
    throw std::invalid_argument("GeodesicFamily: cone geodesics need a cone space");
  if (!metric_.in_domain(center_))
    throw std::domain_error("GeodesicFamily: center outside the space domain");
}

Eigen::VectorXd GeodesicFamily::point_at(const Eigen::VectorXd& y, double s) const {
  if (s < -1e-12 || s > 1.0 + 1e-12)
    throw std::invalid_argument("GeodesicFamily: s outside [0, 1]");
  s = std::min(std::max(s, 0.0), 1.0);
  if (!metric_.in_domain(y))
    throw std::domain_error("GeodesicFamily: endpoint outside the space domain");
  const auto& xb = center_;
  switch (kind_) {
    case GeodesicKind::StraightLine: {
      if (metric_.space() == SpaceKind::TorusTimesLine) {
        Eigen::VectorXd out(2);
        out[0] = wrap01(xb[0] + s * circle_diff(y[0], xb[0]));
        out[1] = xb[1] + s * (y[1] - xb[1]);
        return out;
      }
      return xb + s * (y - xb);
    }
    case GeodesicKind::ThompsonStraight: {
      const bool std_cone = metric_.space() == SpaceKind::StandardConeInterior;
      double beta, alpha;
      if (std_cone) {
        beta = gauge_M_standard(xb, y);
        alpha = gauge_m_standard(xb, y);
      } else {
        beta = gauge_M_psd(unpack_square(xb), unpack_square(y));
        alpha = gauge_m_psd(unpack_square(xb), unpack_square(y));
      }
      if (beta - alpha <= 1e-12 * std::max(beta, 1.0)) {
        // y is (numerically) proportional to the center.
        return s * std::pow(beta, s - 1.0) * y +
               (1.0 - s) * std::pow(beta, s) * xb;
      }
      const double cy = (std::pow(beta, s) - std::pow(alpha, s)) / (beta - alpha);
      const double cx = (beta * std::pow(alpha, s) - alpha * std::pow(beta, s)) /
                        (beta - alpha);
      return cy * y + cx * xb;
    }
    case GeodesicKind::GeometricMean: {
      if (metric_.space() == SpaceKind::StandardConeInterior) {
        Eigen::VectorXd out(y.size());
        for (int i = 0; i < y.size(); ++i)
          out[i] = std::exp((1.0 - s) * std::log(xb[i]) + s * std::log(y[i]));
        return out;
      }
      const Eigen::MatrixXd z = unpack_square(xb);
      const Eigen::MatrixXd zh = sym_sqrt(z);
      const Eigen::MatrixXd zmh = sym_pinv_sqrt(z, kInteriorRel);
      const Eigen::MatrixXd w = symmetrize(zmh * unpack_square(y) * zmh);
      return pack_square(symmetrize(zh * sym_pow(w, s) * zh));
    }
  }
  throw std::logic_error("GeodesicFamily: unreachable");
}

ViolationReport check_triangle(const HemiMetric& m, const SamplePlan& plan) {
  Rng rng(plan.seed);
  ViolationReport rep;
  for (int it = 0; it < plan.count; ++it) {
    const Eigen::VectorXd x = m.sample_point(rng);
    const Eigen::VectorXd y = m.sample_point(rng);
    const Eigen::VectorXd z = m.sample_point(rng);
    const double excess = m.delta(x, z) - m.delta(x, y) - m.delta(y, z);
    ++rep.count_checked;
    if (excess > plan.tol) {
      std::ostringstream os;
      os << "triangle violated at sample " << it;
      rep.record(os.str(), excess);
    }
  }
  return rep;
}

ViolationReport check_separation(const HemiMetric& m, const SamplePlan& plan) {
  Rng rng(plan.seed);
  ViolationReport rep;
  for (int it = 0; it < plan.count; ++it) {
    const Eigen::VectorXd x = m.sample_point(rng);
    const Eigen::VectorXd y = m.sample_point(rng);
    ++rep.count_checked;
    const double self = std::abs(m.delta(x, x));
    if (self > plan.tol) {
      std::ostringstream os;
      os << "delta(x,x) != 0 at sample " << it;
      rep.record(os.str(), self);
    }
    if (!m.weakly_separating()) continue;  // pseudo-hemi-metric, documented
    const double scale = std::max(x.norm(), y.norm());
    if ((x - y).norm() > 1e-6 * std::max(scale, 1.0) &&
        m.induced(x, y) <= plan.tol) {
      std::ostringstream os;
      os << "distinct points at zero distance at sample " << it;
      rep.record(os.str(), plan.tol - m.induced(x, y));
    }
  }
  return rep;
}

ViolationReport check_geodesic_identity(const GeodesicFamily& g, const SamplePlan& plan) {
  Rng rng(plan.seed);
  ViolationReport rep;
  const HemiMetric& m = g.metric();
  for (int it = 0; it < plan.count; ++it) {
    const Eigen::VectorXd y = m.sample_point(rng);
    double s = rng.uniform01(), t = rng.uniform01();
    if (s > t) std::swap(s, t);
    const double base = m.delta(g.center(), y);
    const double along = m.delta(g.point_at(y, s), g.point_at(y, t));
    const double excess = std::abs(along - (t - s) * base);
    ++rep.count_checked;
    if (excess > plan.tol) {
      std::ostringstream os;
      os << "geodesic identity violated at sample " << it << " (s=" << s
         << ", t=" << t << ")";
      rep.record(os.str(), excess);
    }
  }
  return rep;
}

ViolationReport check_star_shaped(const GeodesicFamily& g, const SamplePlan& plan) {
  Rng rng(plan.seed);
  ViolationReport rep;
  const HemiMetric& m = g.metric();
  for (int it = 0; it < plan.count; ++it) {
    const Eigen::VectorXd y = m.sample_point(rng);
    const Eigen::VectorXd z = m.sample_point(rng);
    const double s = rng.uniform01();
    const double excess = m.delta(g.point_at(y, s), g.point_at(z, s)) - s * m.delta(y, z);
    ++rep.count_checked;
    if (excess > plan.tol) {
      std::ostringstream os;
      os << "convexity violated at sample " << it << " (s=" << s << ")";
      rep.record(os.str(), excess);
    }
  }
  return rep;
}

std::string to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::StandardConeInterior: return "standard-cone-interior";
    case SpaceKind::PsdConeInterior: return "psd-cone-interior";
    case SpaceKind::RealVectorSpace: return "real-vector-space";
    case SpaceKind::TorusTimesLine: return "torus-times-line";
  }
  return "?";
}

std::string to_string(MetricKind k) {
  switch (k) {
    case MetricKind::NormSup: return "norm-sup";
    case MetricKind::NormL2: return "norm-l2";
    case MetricKind::Top: return "top";
    case MetricKind::Bottom: return "bottom";
    case MetricKind::Rfunk: return "rfunk";
    case MetricKind::RfunkPlus: return "rfunk-plus";
    case MetricKind::Thompson: return "thompson";
    case MetricKind::Hilbert: return "hilbert";
    case MetricKind::DeltaNu: return "delta-nu";
    case MetricKind::Torus: return "torus";
  }
  return "?";
}

std::string to_string(NuKind k) {
  switch (k) {
    case NuKind::MaxAbs: return "max-abs";
    case NuKind::Spread: return "spread";
    case NuKind::Max: return "max";
    case NuKind::MaxPlus: return "max-plus";
  }
  return "?";
}

std::string to_string(GeodesicKind k) {
  switch (k) {
    case GeodesicKind::StraightLine: return "straight-line";
    case GeodesicKind::ThompsonStraight: return "thompson-straight";
    case GeodesicKind::GeometricMean: return "geometric-mean";
  }
  return "?";
}

}  // namespace ratecert
