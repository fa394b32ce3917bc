#include "ratecert/escape_estimation.hpp"

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

double guarded_displacement(const Operator& op, const HemiMetric& metric,
                            const Eigen::VectorXd& y) {
  if (!metric.in_domain(y)) return kInf;
  try {
    const Eigen::VectorXd ty = op.apply(y);
    if (!ty.allFinite()) return kInf;
    return metric.delta(y, ty);
  } catch (const std::exception&) {
    return kInf;
  }
}

}  // namespace

std::vector<DampedPoint> y_alpha_path(const Operator& op,
                                      const GeodesicFamily& family,
                                      const HemiMetric& metric, int max_levels,
                                      long iteration_budget, double stop_tol) {
  if (op.space() != metric.space() || op.point_size() != metric.point_size())
    throw std::invalid_argument("y_alpha_path: operator and metric disagree");
  std::vector<DampedPoint> out;
  Eigen::VectorXd y = family.center();
  long used = 0;
  for (int j = 1; j <= max_levels && used < iteration_budget; ++j) {
    const double alpha = 1.0 - std::ldexp(1.0, -j);
    DampedPoint pt;
    pt.alpha = alpha;
    const long level_budget =
        std::max<long>(100, iteration_budget / std::max(1, max_levels));
    bool alive = true;
    for (long it = 0; it < level_budget && used < iteration_budget; ++it) {
      ++used;
      ++pt.iterations;
      Eigen::VectorXd yn;
      try {
        yn = op.apply(family.point_at(y, alpha));
      } catch (const std::exception&) {
        alive = false;
        break;
      }
      if (!yn.allFinite() || yn.lpNorm<Eigen::Infinity>() > 1e100) {
        alive = false;
        break;
      }
      pt.residual = metric.induced(y, yn);
      y = std::move(yn);
      if (pt.residual <= stop_tol * (1.0 - alpha)) {
        pt.converged = true;
        break;
      }
    }
    if (!alive) break;
    pt.y = y;
    if (op.cone_operator()) {
      const double s = y.lpNorm<Eigen::Infinity>();
      if (s > 0.0 && std::isfinite(s)) pt.direction = y / s;
    }
    pt.displacement = guarded_displacement(op, metric, y);
    out.push_back(pt);
    if (!pt.converged) break;  // budget ran dry at this level
  }
  return out;
}

DisplacementProbe displacement_descent(const Operator& op,
                                       const HemiMetric& metric,
                                       const Eigen::VectorXd& start,
                                       int iterations) {
  DisplacementProbe best{start, guarded_displacement(op, metric, start)};
  const bool psd = op.space() == SpaceKind::PsdConeInterior;
  const bool log_coords =
      op.space() == SpaceKind::StandardConeInterior && start.minCoeff() > 0.0;
  const bool torus = op.space() == SpaceKind::TorusTimesLine;
  const int n = op.dimension();

  // Index the coordinate moves once: lower triangle for PSD points so the
  // candidates stay symmetric, plain coordinates otherwise.
  std::vector<std::pair<int, int>> moves;
  if (psd) {
    for (int c = 0; c < n; ++c)
      for (int r = c; r < n; ++r) moves.push_back({r, c});
  } else {
    for (int i = 0; i < start.size(); ++i) moves.push_back({i, i});
  }

  Eigen::VectorXd y = best.point;
  double step = 0.25;
  for (int it = 0; it < iterations && step > 1e-13; ++it) {
    bool improved = false;
    const double scale = std::max(1.0, y.lpNorm<Eigen::Infinity>());
    for (const auto& [r, c] : moves) {
      for (const double dir : {+1.0, -1.0}) {
        Eigen::VectorXd cand = y;
        if (psd) {
          cand[c * n + r] += dir * step * scale;
          if (r != c) cand[r * n + c] += dir * step * scale;
        } else if (log_coords) {
          cand[r] *= std::exp(dir * step);
        } else {
          cand[r] += dir * step * scale;
          if (torus && r == 0) cand[0] = wrap01(cand[0]);
        }
        const double v = guarded_displacement(op, metric, cand);
        if (v < best.value - 1e-15) {
          best = {cand, v};
          y = cand;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

std::optional<double> closed_form_rate(const Operator& op,
                                       const HemiMetric& metric) {
  const MetricKind mk = metric.kind();
  switch (op.kind()) {
    case OperatorKind::Translation: {
      const Eigen::VectorXd& c = op.shift();
      // delta(x, x + k c) = k p(c) for every positively homogeneous p.
      if (mk == MetricKind::Top) return c.maxCoeff();
      if (mk == MetricKind::Bottom) return (-c).maxCoeff();
      if (mk == MetricKind::NormSup) return c.lpNorm<Eigen::Infinity>();
      if (mk == MetricKind::NormL2) return c.norm();
      return std::nullopt;
    }
    case OperatorKind::TorusShift:
      if (mk == MetricKind::Torus) return std::abs(op.torus_drift());
      return std::nullopt;
    case OperatorKind::MaxPlus:
      // delta_top(0, T^k 0)/k converges to the maximum cycle mean.
      if (mk == MetricKind::Top) return karp_cycle_mean(op.matrix());
      return std::nullopt;
    case OperatorKind::Shapley: {
      const GameSpec& g = op.game();
      if (g.states != 1) return std::nullopt;
      Eigen::MatrixXd stage(g.actions_a[0], g.actions_b[0]);
      for (int a = 0; a < g.actions_a[0]; ++a)
        for (int b = 0; b < g.actions_b[0]; ++b) stage(a, b) = g.payoff[0][a][b];
      const double v = matrix_game_value(stage).value;  // T(x) = x + v
      if (mk == MetricKind::Top) return v;
      if (mk == MetricKind::Bottom) return -v;
      if (mk == MetricKind::NormSup || mk == MetricKind::NormL2)
        return std::abs(v);
      return std::nullopt;
    }
    default:
      return std::nullopt;
  }
}

RateEstimate orbit_rate(const Operator& op, const HemiMetric& metric,
                        const Eigen::VectorXd& x0, int horizon,
                        OrbitTrace* trace_out) {
  if (op.space() != metric.space() || op.point_size() != metric.point_size())
    throw std::invalid_argument("orbit_rate: operator and metric disagree");
  if (horizon < 1) throw std::invalid_argument("orbit_rate: horizon < 1");

  RateEstimate est;
  est.horizon = horizon;
  est.exact = closed_form_rate(op, metric);

  OrbitTrace trace = run_orbit(op, metric, x0, horizon);
  est.orbit_steps = trace.steps_run;
  est.orbit_truncated = trace.truncated;
  if (!trace.running_min.empty()) est.upper_from_orbit = trace.running_min.back();

  const MetricKind mk = metric.kind();
  const bool mult_order =
      op.cone_operator() && op.order_preserving() &&
      op.positively_homogeneous() &&
      (mk == MetricKind::Rfunk || mk == MetricKind::RfunkPlus ||
       mk == MetricKind::Thompson ||
       (mk == MetricKind::DeltaNu && *metric.nu() != NuKind::Spread));
  const bool add_order = op.space() == SpaceKind::RealVectorSpace &&
                         op.order_preserving() &&
                         op.additively_homogeneous() &&
                         (mk == MetricKind::Top || mk == MetricKind::NormSup);
  const bool psd = op.space() == SpaceKind::PsdConeInterior;

  for (std::size_t i = 1; i < trace.snapshots.size(); ++i) {
    const int k = trace.snapshot_index[i];
    const Eigen::VectorXd& snap = trace.snapshots[i];
    if (mult_order) {
      // T^k x >= m x with log m = log_scale + log m(snap / x0), and
      // log(m_k)/k is a lower bound of the rate by superadditivity.
      const double m = psd ? gauge_m_psd(unpack_square(x0), unpack_square(snap))
                           : gauge_m_standard(x0, snap);
      if (m > 0.0)
        est.lower_from_order =
            std::max(est.lower_from_order,
                     (trace.snapshot_log_scale[i] + std::log(m)) / k);
    } else if (add_order) {
      est.lower_from_order =
          std::max(est.lower_from_order, (snap - x0).minCoeff() / k);
    }
  }

  // Displacement probes from the snapshots: gauge deltas are scale
  // invariant, so renormalized points stand in for the true iterates.
  Eigen::VectorXd best_pt = x0;
  double best_val = guarded_displacement(op, metric, x0);
  for (const Eigen::VectorXd& snap : trace.snapshots) {
    const double v = guarded_displacement(op, metric, snap);
    if (v < best_val) {
      best_val = v;
      best_pt = snap;
    }
  }
  est.upper_from_point = best_val;
  est.best_point = best_pt;

  est.probes.push_back(x0);
  const std::size_t snap_stride =
      std::max<std::size_t>(1, trace.snapshots.size() / 8);
  for (std::size_t i = snap_stride; i < trace.snapshots.size(); i += snap_stride)
    est.probes.push_back(trace.snapshots[i]);
  if (trace_out) *trace_out = std::move(trace);
  return est;
}

RateEstimate estimate_rate(const Operator& op, const HemiMetric& metric,
                           const Eigen::VectorXd& x0, int horizon) {
  RateEstimate est = orbit_rate(op, metric, x0, horizon);
  Eigen::VectorXd best_pt = est.best_point;
  double best_val = est.upper_from_point;

  const DisplacementProbe local = displacement_descent(op, metric, best_pt, 200);
  if (local.value < best_val) {
    best_val = local.value;
    best_pt = local.point;
  }

  std::vector<Eigen::VectorXd> damped_points;
  try {
    const GeodesicKind gk = op.cone_operator() ? GeodesicKind::GeometricMean
                                               : GeodesicKind::StraightLine;
    const GeodesicFamily family(gk, metric, x0);
    for (const DampedPoint& pt : y_alpha_path(op, family, metric)) {
      damped_points.push_back(pt.y);
      if (pt.displacement < best_val) {
        best_val = pt.displacement;
        best_pt = pt.y;
      }
    }
  } catch (const std::exception&) {
    // No geodesic family for this metric/space: skip the damped path.
  }

  est.upper_from_point = best_val;
  est.best_point = best_pt;
  for (const Eigen::VectorXd& y : damped_points) est.probes.push_back(y);
  est.probes.push_back(best_pt);
  if (est.probes.size() > 24) est.probes.resize(24);
  return est;
}

MartinKernel::MartinKernel(HemiMetric metric, Eigen::VectorXd basepoint,
                           Eigen::VectorXd y)
    : metric_(std::move(metric)), y_(std::move(y)) {
  if (basepoint.size() != metric_.point_size() ||
      y_.size() != metric_.point_size())
    throw std::invalid_argument("MartinKernel: point size mismatch");
  base_ = metric_.delta(basepoint, y_);
}

double MartinKernel::operator()(const Eigen::VectorXd& v) const {
  return base_ - metric_.delta(v, y_);
}

MartinKernel martin_kernel_snapshot(const HemiMetric& metric,
                                    const Eigen::VectorXd& basepoint,
                                    const Eigen::VectorXd& y) {
  return MartinKernel(metric, basepoint, y);
}

}  // namespace ratecert
