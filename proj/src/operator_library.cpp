#include "ratecert/operator_library.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ratecert/gauges.hpp"
#include "ratecert/linalg.hpp"

namespace ratecert {

namespace {

double wrap01(double v) {
  double w = std::fmod(v, 1.0);
  if (w < 0.0) w += 1.0;
  return w;
}

bool gauge_space(SpaceKind s) {
  return s == SpaceKind::StandardConeInterior || s == SpaceKind::PsdConeInterior;
}

bool gauge_metric(MetricKind k) {
  switch (k) {
    case MetricKind::Rfunk:
    case MetricKind::RfunkPlus:
    case MetricKind::Thompson:
    case MetricKind::Hilbert:
    case MetricKind::DeltaNu:
      return true;
    default:
      return false;
  }
}

// log M(x / base) and log m(x / base) on the packed representation.
void log_gauges(SpaceKind space, const Eigen::VectorXd& base,
                const Eigen::VectorXd& x, double& lmax, double& lmin) {
  double big, small;
  if (space == SpaceKind::StandardConeInterior) {
    big = gauge_M_standard(base, x);
    small = gauge_m_standard(base, x);
  } else if (space == SpaceKind::PsdConeInterior) {
    const Eigen::MatrixXd bm = unpack_square(base);
    const Eigen::MatrixXd xm = unpack_square(x);
    big = gauge_M_psd(bm, xm);
    small = gauge_m_psd(bm, xm);
  } else {
    throw std::invalid_argument("log_gauges: not a cone space");
  }
  lmax = std::log(big);
  lmin = small > 0.0 ? std::log(small) : -kInf;
}

}  // namespace

Operator Operator::nonneg_matrix(const Eigen::MatrixXd& a) {
  if (a.rows() < 1 || a.rows() != a.cols())
    throw std::invalid_argument("nonneg_matrix: square matrix required");
  if (!(a.array() >= 0.0).all() || !a.allFinite())
    throw std::invalid_argument("nonneg_matrix: entries must be finite and >= 0");
  // A zero row would map the interior onto the cone boundary.
  for (int i = 0; i < a.rows(); ++i)
    if (a.row(i).maxCoeff() <= 0.0)
      throw std::invalid_argument("nonneg_matrix: zero row");
  Operator op;
  op.kind_ = OperatorKind::NonnegMatrix;
  op.space_ = SpaceKind::StandardConeInterior;
  op.dim_ = static_cast<int>(a.rows());
  op.a_ = a;
  return op;
}

Operator Operator::max_plus(const Eigen::MatrixXd& a) {
  if (a.rows() < 1 || a.rows() != a.cols())
    throw std::invalid_argument("max_plus: square matrix required");
  for (int i = 0; i < a.rows(); ++i) {
    double row_top = -kInf;
    for (int j = 0; j < a.cols(); ++j) {
      if (a(i, j) == kInf || std::isnan(a(i, j)))
        throw std::invalid_argument("max_plus: entries must be finite or -inf");
      row_top = std::max(row_top, a(i, j));
    }
    if (row_top == -kInf)
      throw std::invalid_argument("max_plus: row without finite entries");
  }
  Operator op;
  op.kind_ = OperatorKind::MaxPlus;
  op.space_ = SpaceKind::RealVectorSpace;
  op.dim_ = static_cast<int>(a.rows());
  op.a_ = a;
  return op;
}

Operator Operator::shapley(GameSpec game) {
  game.validate();
  Operator op;
  op.kind_ = OperatorKind::Shapley;
  op.space_ = SpaceKind::RealVectorSpace;
  op.dim_ = game.states;
  op.game_ = std::make_shared<const GameSpec>(std::move(game));
  return op;
}

Operator Operator::riccati(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(a.rows());
  if (n < 1 || a.cols() != n || b.rows() != n || b.cols() != n ||
      m.rows() != n || m.cols() != n)
    throw std::invalid_argument("riccati: A, B, M must be square of one size");
  auto require_psd = [n](const Eigen::MatrixXd& s, const char* name) {
    const Eigen::MatrixXd sym = symmetrize(s);
    const SymEig eig = jacobi_eigen(sym);
    const double top = std::max(std::abs(eig.values[n - 1]), std::abs(eig.values[0]));
    if (eig.values[0] < -1e-12 * std::max(top, 1.0))
      throw std::invalid_argument(std::string("riccati: ") + name +
                                  " must be positive semidefinite");
    return sym;
  };
  if (!m.allFinite())
    throw std::invalid_argument("riccati: M must be finite");
  const SymEig gram = jacobi_eigen(symmetrize(m.transpose() * m));
  const double smin = std::sqrt(std::max(gram.values[0], 0.0));
  const double smax = std::sqrt(std::max(gram.values[n - 1], 0.0));
  if (!(smin > 1e-14 * std::max(smax, 1.0)))
    throw std::invalid_argument("riccati: M must be invertible");
  Operator op;
  op.kind_ = OperatorKind::Riccati;
  op.space_ = SpaceKind::PsdConeInterior;
  op.dim_ = n;
  op.a_ = require_psd(a, "A");
  op.b_ = require_psd(b, "B");
  op.m_ = m;
  op.m_condition_ = smax / smin;
  return op;
}

Operator Operator::translation(const Eigen::VectorXd& c, MetricKind norm_kind) {
  if (c.size() < 1 || !c.allFinite())
    throw std::invalid_argument("translation: finite shift required");
  if (norm_kind != MetricKind::Top && norm_kind != MetricKind::Bottom &&
      norm_kind != MetricKind::NormSup && norm_kind != MetricKind::NormL2)
    throw std::invalid_argument("translation: norm_kind must be a vector norm");
  Operator op;
  op.kind_ = OperatorKind::Translation;
  op.space_ = SpaceKind::RealVectorSpace;
  op.dim_ = static_cast<int>(c.size());
  op.c_ = c;
  op.norm_kind_ = norm_kind;
  return op;
}

Operator Operator::torus_shift(double alpha, double drift) {
  if (!std::isfinite(alpha) || !std::isfinite(drift))
    throw std::invalid_argument("torus_shift: parameters must be finite");
  if (!(alpha > 0.0 && alpha < 0.5))
    throw std::invalid_argument("torus_shift: alpha must lie in (0, 1/2)");
  Operator op;
  op.kind_ = OperatorKind::TorusShift;
  op.space_ = SpaceKind::TorusTimesLine;
  op.dim_ = 2;
  op.alpha_ = alpha;
  op.drift_ = drift;
  return op;
}

Operator Operator::composite(std::vector<Operator> parts) {
  if (parts.empty()) throw std::invalid_argument("composite: no parts");
  for (const Operator& p : parts)
    if (p.space() != parts[0].space() || p.point_size() != parts[0].point_size())
      throw std::invalid_argument("composite: parts act on different spaces");
  Operator op;
  op.kind_ = OperatorKind::Composite;
  op.space_ = parts[0].space();
  op.dim_ = parts[0].dim_;
  op.parts_ = std::move(parts);
  return op;
}

Eigen::Index Operator::point_size() const {
  if (space_ == SpaceKind::PsdConeInterior)
    return static_cast<Eigen::Index>(dim_) * dim_;
  return dim_;
}

Eigen::VectorXd Operator::apply(const Eigen::VectorXd& x) const {
  if (x.size() != point_size())
    throw std::invalid_argument("Operator::apply: point size mismatch");
  switch (kind_) {
    case OperatorKind::NonnegMatrix:
      return a_ * x;
    case OperatorKind::MaxPlus: {
      Eigen::VectorXd y(dim_);
      for (int i = 0; i < dim_; ++i) {
        double best = -kInf;
        for (int j = 0; j < dim_; ++j)
          if (a_(i, j) != -kInf) best = std::max(best, a_(i, j) + x[j]);
        y[i] = best;
      }
      return y;
    }
    case OperatorKind::Shapley:
      return shapley_apply(*game_, x);
    case OperatorKind::Riccati: {
      // A + M (X^{-1} + B)^{-1} M^T, computed as S (I + S B S)^{-1} S with
      // S = X^{1/2} so the formula extends to the whole closed cone.
      const Eigen::MatrixXd s = sym_sqrt(symmetrize(unpack_square(x)));
      Eigen::MatrixXd inner = Eigen::MatrixXd::Identity(dim_, dim_) +
                              symmetrize(s * b_ * s);
      const Eigen::MatrixXd y = s * inner.llt().solve(s);
      return pack_square(symmetrize(a_ + m_ * y * m_.transpose()));
    }
    case OperatorKind::Translation:
      return x + c_;
    case OperatorKind::TorusShift: {
      Eigen::VectorXd y(2);
      y[0] = wrap01(x[0] + alpha_);
      y[1] = x[1] + drift_;
      return y;
    }
    case OperatorKind::Composite: {
      Eigen::VectorXd y = x;
      for (const Operator& p : parts_) y = p.apply(y);
      return y;
    }
  }
  throw std::logic_error("Operator::apply: unreachable");
}

bool Operator::order_preserving() const {
  switch (kind_) {
    case OperatorKind::NonnegMatrix:
    case OperatorKind::MaxPlus:
    case OperatorKind::Shapley:
    case OperatorKind::Riccati:
    case OperatorKind::Translation:
      return true;
    case OperatorKind::TorusShift:
      return false;
    case OperatorKind::Composite:
      return std::all_of(parts_.begin(), parts_.end(),
                         [](const Operator& p) { return p.order_preserving(); });
  }
  return false;
}

bool Operator::positively_homogeneous() const {
  switch (kind_) {
    case OperatorKind::NonnegMatrix:
      return true;
    case OperatorKind::Composite:
      return std::all_of(parts_.begin(), parts_.end(), [](const Operator& p) {
        return p.positively_homogeneous();
      });
    default:
      return false;
  }
}

bool Operator::sub_homogeneous() const {
  switch (kind_) {
    case OperatorKind::NonnegMatrix:
    case OperatorKind::Riccati:
      return true;
    case OperatorKind::Composite:
      // f(g(s x)) <= f(s g(x)) <= s f(g(x)) needs monotone sub-homogeneous
      // parts throughout.
      return order_preserving() &&
             std::all_of(parts_.begin(), parts_.end(),
                         [](const Operator& p) { return p.sub_homogeneous(); });
    default:
      return false;
  }
}

bool Operator::additively_homogeneous() const {
  switch (kind_) {
    case OperatorKind::MaxPlus:
    case OperatorKind::Shapley:
    case OperatorKind::Translation:
      return true;
    case OperatorKind::Composite:
      return space_ == SpaceKind::RealVectorSpace &&
             std::all_of(parts_.begin(), parts_.end(), [](const Operator& p) {
               return p.additively_homogeneous();
             });
    default:
      return false;
  }
}

bool Operator::cone_operator() const { return gauge_space(space_); }

bool Operator::extends_continuously() const {
  switch (kind_) {
    case OperatorKind::NonnegMatrix:
    case OperatorKind::Riccati:
      return true;
    case OperatorKind::Composite:
      return std::all_of(parts_.begin(), parts_.end(), [](const Operator& p) {
        return p.extends_continuously();
      });
    default:
      return !cone_operator();
  }
}

MetricKind Operator::natural_metric() const {
  switch (kind_) {
    case OperatorKind::NonnegMatrix:
      return MetricKind::Rfunk;
    case OperatorKind::Riccati:
      return MetricKind::RfunkPlus;
    case OperatorKind::MaxPlus:
    case OperatorKind::Shapley:
      return MetricKind::Top;
    case OperatorKind::Translation:
      return norm_kind_;
    case OperatorKind::TorusShift:
      return MetricKind::Torus;
    case OperatorKind::Composite:
      return parts_[0].natural_metric();
  }
  return MetricKind::Top;
}

std::vector<MetricKind> Operator::admissible_metrics() const {
  if (cone_operator())
    return {MetricKind::Rfunk, MetricKind::RfunkPlus, MetricKind::Thompson,
            MetricKind::Hilbert, MetricKind::DeltaNu};
  if (space_ == SpaceKind::TorusTimesLine) return {MetricKind::Torus};
  return {MetricKind::Top, MetricKind::Bottom, MetricKind::NormSup,
          MetricKind::NormL2};
}

namespace {

// One radial limit T(x + eps z) along a halving eps schedule.
Eigen::VectorXd limit_along(const Operator& op, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& z, bool& settled) {
  const double base = std::max(x.lpNorm<Eigen::Infinity>(), 1.0);
  settled = false;
  Eigen::VectorXd prev = op.apply(x + (0.5 * base) * z);
  for (int j = 2; j <= 40; ++j) {
    const double eps = std::ldexp(base, -j);
    Eigen::VectorXd cur = op.apply(x + eps * z);
    const double change = (cur - prev).lpNorm<Eigen::Infinity>();
    prev = std::move(cur);
    if (change <= 1e-10 * std::max(1.0, prev.lpNorm<Eigen::Infinity>())) {
      settled = true;
      break;
    }
  }
  return prev;
}

}  // namespace

ExtensionResult Operator::radial_extension(const Eigen::VectorXd& x,
                                           bool force_limit) const {
  ExtensionResult out;
  if (!cone_operator() || (!force_limit && extends_continuously())) {
    out.value = apply(x);
    out.converged = true;
    out.exact = true;
    return out;
  }

  const bool psd = space_ == SpaceKind::PsdConeInterior;
  Eigen::VectorXd graded(dim_);
  for (int i = 0; i < dim_; ++i)
    graded[i] = 1.0 + static_cast<double>(i + 1) / dim_;
  Eigen::VectorXd z1, z2;
  if (psd) {
    z1 = pack_square(Eigen::MatrixXd::Identity(dim_, dim_));
    z2 = pack_square(Eigen::MatrixXd(graded.asDiagonal()));
  } else {
    z1 = Eigen::VectorXd::Ones(dim_);
    z2 = graded;
  }
  bool s1 = false, s2 = false;
  out.value = limit_along(*this, x, z1, s1);
  const Eigen::VectorXd alt = limit_along(*this, x, z2, s2);
  const double scale = std::max(1.0, out.value.lpNorm<Eigen::Infinity>());
  out.cross_check = (out.value - alt).lpNorm<Eigen::Infinity>() / scale;
  out.converged = s1 && s2 && out.cross_check <= 1e-8;
  if (!out.converged) out.note = "radial limit did not settle";
  return out;
}

ExtensionResult Operator::recession(const Eigen::VectorXd& u) const {
  if (!cone_operator())
    throw std::domain_error("recession: cone operator required");
  if (!order_preserving() || !(sub_homogeneous() || positively_homogeneous()))
    throw std::domain_error(
        "recession: order-preserving sub-homogeneous operator required");
  if (positively_homogeneous()) return radial_extension(u);

  const bool psd = space_ == SpaceKind::PsdConeInterior;
  ExtensionResult out = radial_extension(u);
  if (!out.converged) return out;
  out.converged = false;
  out.exact = false;
  for (int j = 1; j <= 40; ++j) {
    const double gamma = std::ldexp(1.0, j);
    ExtensionResult along = radial_extension(gamma * u);
    if (!along.converged) {
      out.note = along.note;
      return out;
    }
    Eigen::VectorXd cur = along.value / gamma;
    if (out.value.lpNorm<Eigen::Infinity>() <=
        1e-300 * std::max(1.0, u.lpNorm<Eigen::Infinity>())) {
      out.converged = true;  // already collapsed to zero
      return out;
    }
    // Monotone decrease in the cone order is what makes the last iterate an
    // upper estimate of the infimum; a failure means the operator data is
    // not what the flags claim.
    double big;
    if (psd) {
      big = gauge_M_psd(unpack_square(out.value), unpack_square(cur));
    } else {
      big = gauge_M_standard(out.value, cur);
    }
    if (big > 1.0 + 1e-9) {
      out.note = "monotonicity check failed";
      return out;
    }
    const double change = (cur - out.value).lpNorm<Eigen::Infinity>();
    out.value = std::move(cur);
    if (change <= 1e-12 * std::max(1.0, out.value.lpNorm<Eigen::Infinity>())) {
      out.converged = true;
      return out;
    }
  }
  out.note = "gamma schedule exhausted";
  return out;
}

const Eigen::MatrixXd& Operator::matrix() const {
  if (kind_ != OperatorKind::NonnegMatrix && kind_ != OperatorKind::MaxPlus)
    throw std::logic_error("Operator::matrix: wrong kind");
  return a_;
}

const GameSpec& Operator::game() const {
  if (kind_ != OperatorKind::Shapley)
    throw std::logic_error("Operator::game: wrong kind");
  return *game_;
}

const Eigen::MatrixXd& Operator::riccati_a() const {
  if (kind_ != OperatorKind::Riccati)
    throw std::logic_error("Operator::riccati_a: wrong kind");
  return a_;
}

const Eigen::MatrixXd& Operator::riccati_b() const {
  if (kind_ != OperatorKind::Riccati)
    throw std::logic_error("Operator::riccati_b: wrong kind");
  return b_;
}

const Eigen::MatrixXd& Operator::riccati_m() const {
  if (kind_ != OperatorKind::Riccati)
    throw std::logic_error("Operator::riccati_m: wrong kind");
  return m_;
}

double Operator::riccati_m_condition() const {
  if (kind_ != OperatorKind::Riccati)
    throw std::logic_error("Operator::riccati_m_condition: wrong kind");
  return m_condition_;
}

const Eigen::VectorXd& Operator::shift() const {
  if (kind_ != OperatorKind::Translation)
    throw std::logic_error("Operator::shift: wrong kind");
  return c_;
}

double Operator::torus_alpha() const {
  if (kind_ != OperatorKind::TorusShift)
    throw std::logic_error("Operator::torus_alpha: wrong kind");
  return alpha_;
}

double Operator::torus_drift() const {
  if (kind_ != OperatorKind::TorusShift)
    throw std::logic_error("Operator::torus_drift: wrong kind");
  return drift_;
}

const std::vector<Operator>& Operator::parts() const {
  if (kind_ != OperatorKind::Composite)
    throw std::logic_error("Operator::parts: wrong kind");
  return parts_;
}

double delta_scaled(const HemiMetric& metric, const Eigen::VectorXd& base,
                    const Eigen::VectorXd& x, double log_scale) {
  if (!gauge_metric(metric.kind())) {
    if (log_scale != 0.0)
      throw std::invalid_argument("delta_scaled: metric is not scale-covariant");
    return metric.delta(base, x);
  }
  double lmax = 0.0, lmin = 0.0;
  log_gauges(metric.space(), base, x, lmax, lmin);
  const double top = log_scale + lmax;
  const double bot = log_scale + lmin;
  switch (metric.kind()) {
    case MetricKind::Rfunk:
      return top;
    case MetricKind::RfunkPlus:
      return std::max(top, 0.0);
    case MetricKind::Thompson:
      return std::max(top, -bot);
    case MetricKind::Hilbert:
      return lmax - lmin;
    case MetricKind::DeltaNu:
      switch (*metric.nu()) {
        case NuKind::MaxAbs:
          return std::max(std::abs(top), std::abs(bot));
        case NuKind::Spread:
          return lmax - lmin;
        case NuKind::Max:
          return top;
        case NuKind::MaxPlus:
          return std::max(top, 0.0);
      }
      break;
    default:
      break;
  }
  throw std::logic_error("delta_scaled: unreachable");
}

OrbitTrace run_orbit(const Operator& op, const HemiMetric& metric,
                     const Eigen::VectorXd& x0, int steps, int max_snapshots) {
  if (op.space() != metric.space() || op.point_size() != metric.point_size())
    throw std::invalid_argument("run_orbit: operator and metric disagree");
  if (steps < 1) throw std::invalid_argument("run_orbit: steps < 1");
  if (max_snapshots < 2) max_snapshots = 2;
  if (!metric.in_domain(x0))
    throw std::invalid_argument("run_orbit: x0 outside the metric domain");

  const bool renorm = op.cone_operator() && op.positively_homogeneous() &&
                      gauge_metric(metric.kind());
  const int stride = std::max(1, steps / (max_snapshots - 1));

  OrbitTrace trace;
  trace.from_start.reserve(steps);
  trace.step.reserve(steps);
  trace.running_min.reserve(steps);
  trace.snapshots.push_back(x0);
  trace.snapshot_log_scale.push_back(0.0);
  trace.snapshot_index.push_back(0);

  Eigen::VectorXd x = x0;
  double ls = 0.0;
  for (int k = 1; k <= steps; ++k) {
    Eigen::VectorXd xn = op.apply(x);
    double lsn = ls;
    if (renorm) {
      const double sc = xn.lpNorm<Eigen::Infinity>();
      if (!(sc > 0.0) || !std::isfinite(sc)) {
        trace.truncated = true;
        break;
      }
      xn /= sc;
      lsn += std::log(sc);
    } else {
      // Orbits may drift toward the cone boundary; the gauges still price
      // those points, so only stop on overflow or a delta that fails.
      if (!xn.allFinite() || xn.lpNorm<Eigen::Infinity>() > 1e100) {
        trace.truncated = true;
        break;
      }
    }
    double d_step, d_start;
    try {
      d_step = delta_scaled(metric, x, xn, lsn - ls);
      d_start = delta_scaled(metric, x0, xn, lsn);
    } catch (const std::exception&) {
      trace.truncated = true;
      break;
    }
    if (!std::isfinite(d_step) || !std::isfinite(d_start)) {
      // Infinite gauge distance: the iterate left the numerically
      // representable part of the domain (e.g. an escaping orbit pressed
      // into the cone boundary). Keep the finite prefix.
      trace.truncated = true;
      break;
    }
    trace.step.push_back(d_step);
    trace.from_start.push_back(d_start);
    const double slope = d_start / k;
    trace.running_min.push_back(
        trace.running_min.empty() ? slope
                                  : std::min(trace.running_min.back(), slope));
    x = std::move(xn);
    ls = lsn;
    trace.steps_run = k;
    if (k % stride == 0 || k == steps) {
      trace.snapshots.push_back(x);
      trace.snapshot_log_scale.push_back(ls);
      trace.snapshot_index.push_back(k);
    }
  }
  trace.last = x;
  trace.last_log_scale = ls;
  return trace;
}

std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::NonnegMatrix:
      return "nonneg-matrix";
    case OperatorKind::MaxPlus:
      return "max-plus";
    case OperatorKind::Shapley:
      return "shapley";
    case OperatorKind::Riccati:
      return "riccati";
    case OperatorKind::Translation:
      return "translation";
    case OperatorKind::TorusShift:
      return "torus-shift";
    case OperatorKind::Composite:
      return "composite";
  }
  return "?";
}

}  // namespace ratecert
