#include "ratecert/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ratecert/gauges.hpp"
#include "ratecert/linalg.hpp"

namespace ratecert {

namespace {

double packed_gauge_M(SpaceKind space, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y) {
  if (space == SpaceKind::StandardConeInterior) return gauge_M_standard(x, y);
  return gauge_M_psd(unpack_square(x), unpack_square(y));
}

double packed_gauge_m(SpaceKind space, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& y) {
  if (space == SpaceKind::StandardConeInterior) return gauge_m_standard(x, y);
  return gauge_m_psd(unpack_square(x), unpack_square(y));
}

bool near_duplicate(const std::vector<Eigen::VectorXd>& seen,
                    const Eigen::VectorXd& x) {
  for (const Eigen::VectorXd& s : seen) {
    if (s.size() != x.size()) continue;
    const double scale = std::max(
        1e-300, std::max(s.lpNorm<Eigen::Infinity>(), x.lpNorm<Eigen::Infinity>()));
    if ((s - x).lpNorm<Eigen::Infinity>() <= 1e-13 * scale) return true;
  }
  return false;
}

// Normalized power iteration of the extended operator; lands on the
// dominant direction for expanding maps and on the fixed-point direction
// for contractive ones.
std::optional<Eigen::VectorXd> power_refine(const Operator& op,
                                            Eigen::VectorXd z,
                                            int max_iters = 400) {
  double sc = z.lpNorm<Eigen::Infinity>();
  if (!(sc > 0.0) || !z.allFinite()) return std::nullopt;
  z /= sc;
  for (int it = 0; it < max_iters; ++it) {
    ExtensionResult ext;
    try {
      ext = op.radial_extension(z);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (!ext.converged) return std::nullopt;
    Eigen::VectorXd zn = std::move(ext.value);
    sc = zn.lpNorm<Eigen::Infinity>();
    if (!(sc > 0.0) || !zn.allFinite()) return std::nullopt;
    zn /= sc;
    const double change = (zn - z).lpNorm<Eigen::Infinity>();
    z = std::move(zn);
    if (change <= 1e-15) break;
  }
  return z;
}

std::vector<Eigen::VectorXd> gather_directions(
    const Operator& op, const std::vector<Eigen::VectorXd>& candidates) {
  std::vector<Eigen::VectorXd> out;
  auto push = [&](const Eigen::VectorXd& x) {
    const double sc = x.lpNorm<Eigen::Infinity>();
    if (!(sc > 0.0) || !x.allFinite()) return;
    Eigen::VectorXd unit = x / sc;
    if (!near_duplicate(out, unit)) out.push_back(std::move(unit));
  };
  for (const Eigen::VectorXd& c : candidates) push(c);
  if (!candidates.empty()) {
    if (auto r = power_refine(op, candidates.front())) push(*r);
    if (candidates.size() > 1) {
      if (auto r = power_refine(op, candidates.back())) push(*r);
    }
  }
  return out;
}

bool packed_interior(SpaceKind space, const Eigen::VectorXd& x) {
  const ConeKind ck = space == SpaceKind::StandardConeInterior
                          ? ConeKind::Standard
                          : ConeKind::Psd;
  return ConePoint::from_packed(ck, x).interior();
}

DualCertificate trivial_dual(std::string reason) {
  DualCertificate cert;
  cert.mu = 0.0;
  cert.rate_bound = -kInf;
  cert.trivial = true;
  cert.status = VerifyStatus::Verified;  // rho >= -inf always holds
  cert.reason = std::move(reason);
  return cert;
}

}  // namespace

std::string to_string(VerifyStatus s) {
  switch (s) {
    case VerifyStatus::Verified:
      return "verified";
    case VerifyStatus::Falsified:
      return "falsified";
    case VerifyStatus::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

PrimalCertificate verify_primal(const Operator& op, const Eigen::VectorXd& y,
                                double mu, double tol) {
  PrimalCertificate cert;
  cert.y = y;
  cert.mu = mu;
  cert.homogeneous_rule = op.positively_homogeneous();
  if (!op.cone_operator()) {
    cert.reason = "not a cone operator";
    return cert;
  }
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    cert.reason = "mu must be a positive real";
    return cert;
  }
  if (y.size() != op.point_size() || !packed_interior(op.space(), y)) {
    cert.reason = "y is not an interior point";
    return cert;
  }
  try {
    cert.observed = packed_gauge_M(op.space(), y, op.apply(y));
  } catch (const std::exception& e) {
    cert.reason = e.what();
    return cert;
  }
  cert.slack = mu - cert.observed;
  if (cert.observed <= mu * (1.0 + tol)) {
    cert.status = VerifyStatus::Verified;
    cert.rate_bound = cert.homogeneous_rule ? std::log(mu)
                                            : std::max(std::log(mu), 0.0);
  } else {
    cert.status = VerifyStatus::Falsified;
    cert.reason = "gauge_M(y, T y) exceeds mu";
  }
  return cert;
}

DualCertificate verify_dual(const Operator& op, const Eigen::VectorXd& u,
                            double mu, int k_max, double tol) {
  DualCertificate cert;
  cert.u = u;
  cert.mu = mu;
  if (!op.cone_operator()) {
    cert.reason = "not a cone operator";
    return cert;
  }
  if (!op.order_preserving() ||
      !(op.sub_homogeneous() || op.positively_homogeneous())) {
    cert.reason = "recession map undefined for this operator";
    return cert;
  }
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    cert.reason = "mu must be a nonnegative real";
    return cert;
  }
  if (u.size() != op.point_size() || !(u.lpNorm<Eigen::Infinity>() > 0.0)) {
    cert.reason = "u must be a nonzero cone point";
    return cert;
  }
  cert.trivial = !(mu > 0.0);
  if (cert.trivial) {  // certifies rho >= -inf: nothing to fail
    cert.status = VerifyStatus::Verified;
    cert.rate_bound = -kInf;
    cert.pumping.passed = true;
    return cert;
  }

  ExtensionResult rec;
  try {
    rec = op.recession(u);
  } catch (const std::exception& e) {
    cert.reason = e.what();
    return cert;
  }
  if (!rec.converged) {
    cert.reason = rec.note.empty() ? "recession did not converge" : rec.note;
    return cert;
  }
  cert.recession_at_u = rec.value;
  try {
    cert.observed = packed_gauge_m(op.space(), u, rec.value);
  } catch (const std::exception& e) {
    cert.reason = e.what();
    return cert;
  }
  cert.slack = cert.observed - mu;
  if (!(cert.observed >= mu * (1.0 - tol))) {
    cert.status = VerifyStatus::Falsified;
    cert.reason = "gauge_m(T_r(u) / u) falls short of mu";
    return cert;
  }

  // Pump T^k(u) >= mu^k u on a log scale along the extended orbit.
  const double log_mu = std::log(mu);
  const double unit = tol * std::max(1.0, std::abs(log_mu));
  cert.pumping.worst_slack = kInf;
  Eigen::VectorXd z = u;
  double log_scale = 0.0;
  bool ok = true;
  for (int k = 1; k <= k_max; ++k) {
    ExtensionResult ext;
    try {
      ext = op.radial_extension(z);
    } catch (const std::exception&) {
      ok = false;
      break;
    }
    if (!ext.converged) {
      ok = false;
      break;
    }
    z = std::move(ext.value);
    const double sc = z.lpNorm<Eigen::Infinity>();
    if (!(sc > 0.0) || !z.allFinite()) {
      ok = false;
      break;
    }
    z /= sc;
    log_scale += std::log(sc);
    const double m = packed_gauge_m(op.space(), u, z);
    const double slack =
        (m > 0.0 ? log_scale + std::log(m) : -kInf) - k * log_mu;
    cert.pumping.worst_slack = std::min(cert.pumping.worst_slack, slack);
    cert.pumping.steps = k;
    if (!(slack >= -unit * k)) {
      ok = false;
      break;
    }
  }
  cert.pumping.passed = ok && cert.pumping.steps == k_max;
  if (cert.pumping.passed) {
    cert.status = VerifyStatus::Verified;
    cert.rate_bound = log_mu;
  } else {
    // The one-step inequality held, so a pumping failure points at the
    // recession value rather than the claim.
    cert.reason = "pumping check failed";
  }
  return cert;
}

bool primal_bound_applies(const Operator& op, const HemiMetric& metric) {
  if (!op.cone_operator() || !op.order_preserving()) return false;
  if (!op.positively_homogeneous() && !op.sub_homogeneous()) return false;
  switch (metric.kind()) {
    case MetricKind::Rfunk:
    case MetricKind::RfunkPlus:
      return true;
    case MetricKind::DeltaNu:
      return *metric.nu() == NuKind::Max || *metric.nu() == NuKind::MaxPlus;
    default:
      return false;
  }
}

bool dual_bound_applies(const HemiMetric& metric) {
  switch (metric.kind()) {
    case MetricKind::Rfunk:
    case MetricKind::RfunkPlus:
    case MetricKind::Thompson:
      return true;
    case MetricKind::DeltaNu:
      return *metric.nu() != NuKind::Spread;
    default:
      return false;
  }
}

std::vector<Eigen::VectorXd> boundary_sharpenings(SpaceKind space,
                                                  const Eigen::VectorXd& x) {
  std::vector<Eigen::VectorXd> out;
  if (space == SpaceKind::StandardConeInterior) {
    const double top = x.maxCoeff();
    if (!(top > 0.0)) return out;
    for (const double thresh : {1e-3, 1e-6, 1e-9}) {
      Eigen::VectorXd y = x;
      bool changed = false;
      for (int i = 0; i < y.size(); ++i)
        if (y[i] < thresh * top && y[i] != 0.0) {
          y[i] = 0.0;
          changed = true;
        }
      if (changed && y.maxCoeff() > 0.0 && !near_duplicate(out, y))
        out.push_back(std::move(y));
    }
    return out;
  }
  if (space == SpaceKind::PsdConeInterior) {
    const SymEig eig = jacobi_eigen(symmetrize(unpack_square(x)));
    const int n = static_cast<int>(eig.values.size());
    const double top = eig.values[n - 1];
    if (!(top > 0.0)) return out;
    for (const double thresh : {1e-3, 1e-6, 1e-9}) {
      Eigen::VectorXd vals = eig.values;
      bool changed = false;
      for (int i = 0; i < n; ++i)
        if (vals[i] < thresh * top && vals[i] != 0.0) {
          vals[i] = 0.0;
          changed = true;
        }
      if (!changed || !(vals.maxCoeff() > 0.0)) continue;
      const Eigen::MatrixXd w = symmetrize(
          eig.vectors * vals.asDiagonal() * eig.vectors.transpose());
      Eigen::VectorXd packed = pack_square(w);
      if (!near_duplicate(out, packed)) out.push_back(std::move(packed));
    }
    return out;
  }
  throw std::invalid_argument("boundary_sharpenings: not a cone space");
}

std::optional<PrimalCertificate> search_primal(
    const Operator& op, const HemiMetric& metric,
    const std::vector<Eigen::VectorXd>& candidates) {
  if (op.space() != metric.space()) return std::nullopt;
  if (!primal_bound_applies(op, metric)) return std::nullopt;
  const bool homogeneous = op.positively_homogeneous();
  const std::vector<double> scales =
      homogeneous ? std::vector<double>{1.0}
                  : std::vector<double>{1.0, 1e2, 1e4, 1e6};

  std::optional<PrimalCertificate> best;
  for (const Eigen::VectorXd& dir : gather_directions(op, candidates)) {
    for (const double s : scales) {
      const Eigen::VectorXd y = s * dir;
      if (!metric.in_domain(y)) continue;  // interior points only
      double mu;
      try {
        mu = packed_gauge_M(op.space(), y, op.apply(y));
      } catch (const std::exception&) {
        continue;
      }
      if (!(mu > 0.0) || !std::isfinite(mu)) continue;
      const double bound =
          homogeneous ? std::log(mu) : std::max(std::log(mu), 0.0);
      if (!best || bound < best->rate_bound - 1e-15) {
        PrimalCertificate cert;
        cert.y = y;
        cert.mu = mu;
        cert.rate_bound = bound;
        cert.homogeneous_rule = homogeneous;
        cert.observed = mu;
        cert.slack = 0.0;
        cert.status = VerifyStatus::Verified;
        best = std::move(cert);
      }
    }
  }
  return best;
}

DualCertificate search_dual(const Operator& op, const HemiMetric& metric,
                            const std::vector<Eigen::VectorXd>& candidates) {
  if (!op.cone_operator()) return trivial_dual("not a cone operator");
  if (op.space() != metric.space())
    return trivial_dual("operator and metric disagree");
  if (!op.order_preserving() ||
      (!op.positively_homogeneous() && !op.sub_homogeneous()))
    return trivial_dual("recession map undefined for this operator");

  std::vector<Eigen::VectorXd> pool;
  for (const Eigen::VectorXd& dir : gather_directions(op, candidates)) {
    pool.push_back(dir);
    for (Eigen::VectorXd& s : boundary_sharpenings(op.space(), dir))
      if (!near_duplicate(pool, s)) pool.push_back(std::move(s));
  }
  if (pool.empty()) return trivial_dual("no candidate directions");

  double best_mu = -1.0;
  Eigen::VectorXd best_u;
  for (const Eigen::VectorXd& u : pool) {
    ExtensionResult rec;
    try {
      rec = op.recession(u);
    } catch (const std::exception&) {
      continue;
    }
    if (!rec.converged) continue;
    double mu;
    try {
      mu = packed_gauge_m(op.space(), u, rec.value);
    } catch (const std::exception&) {
      continue;
    }
    if (std::isnan(mu)) continue;
    if (best_mu < 0.0 || mu > best_mu * (1.0 + 1e-12) + 1e-300) {
      best_mu = mu;
      best_u = u;
    }
  }
  if (best_mu < 0.0) return trivial_dual("no candidate had a recession value");
  if (!(best_mu > 0.0)) return trivial_dual("all recession directions vanish");
  return verify_dual(op, best_u, best_mu);
}

namespace {

struct FormPool {
  std::vector<Eigen::VectorXd> forms;
  EvalFormKind kind = EvalFormKind::Coordinate;
  bool ok = false;
};

FormPool metric_extreme_forms(const Operator& op, const HemiMetric& metric) {
  FormPool pool;
  if (op.space() != SpaceKind::RealVectorSpace ||
      metric.space() != SpaceKind::RealVectorSpace)
    return pool;
  std::optional<HemiNorm> norm;
  switch (metric.kind()) {
    case MetricKind::Top:
      norm = HemiNorm::top(op.dimension());
      pool.kind = EvalFormKind::Coordinate;
      break;
    case MetricKind::Bottom:
      norm = HemiNorm::bottom(op.dimension());
      pool.kind = EvalFormKind::Coordinate;
      break;
    case MetricKind::NormSup:
      norm = HemiNorm::sup(op.dimension());
      pool.kind = EvalFormKind::DualBall;
      break;
    default:
      if (metric.custom()) {
        norm = *metric.custom();
        pool.kind = EvalFormKind::DualBall;
      }
      break;
  }
  if (!norm) return pool;  // no finite extreme set (e.g. l2)
  pool.forms = norm->extreme_forms();
  pool.ok = !pool.forms.empty();
  return pool;
}

// Per-form minimum slope min_{k <= horizon} phi(T^k x - x)/k; the whole
// growth inequality at rate r reduces to minslope >= r - tol.
struct SlopeTable {
  std::vector<double> minslope;
  int ran = 0;
};

SlopeTable form_slopes(const Operator& op,
                       const std::vector<Eigen::VectorXd>& forms,
                       const Eigen::VectorXd& anchor, int horizon) {
  SlopeTable table;
  table.minslope.assign(forms.size(), kInf);
  Eigen::VectorXd x = anchor;
  for (int k = 1; k <= horizon; ++k) {
    x = op.apply(x);
    if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > 1e100) break;
    table.ran = k;
    const Eigen::VectorXd diff = x - anchor;
    for (std::size_t i = 0; i < forms.size(); ++i)
      table.minslope[i] = std::min(table.minslope[i], forms[i].dot(diff) / k);
  }
  return table;
}

}  // namespace

std::optional<EvalFormCertificate> kohlberg_neyman_form(
    const Operator& op, const HemiMetric& metric, const Eigen::VectorXd& anchor,
    int horizon) {
  if (horizon < 1 || anchor.size() != op.point_size()) return std::nullopt;
  const FormPool pool = metric_extreme_forms(op, metric);
  if (!pool.ok) return std::nullopt;

  const SlopeTable table = form_slopes(op, pool.forms, anchor, horizon);
  if (table.ran == 0) return std::nullopt;

  std::size_t pick = 0;
  for (std::size_t i = 1; i < pool.forms.size(); ++i)
    if (table.minslope[i] > table.minslope[pick] + 1e-15) pick = i;

  EvalFormCertificate cert;
  cert.kind = pool.kind;
  cert.form = pool.forms[pick];
  cert.form_index = static_cast<int>(pick);
  cert.rate = table.minslope[pick];
  cert.horizon = table.ran;
  cert.worst_slack = 0.0;
  cert.anchor = anchor;
  cert.status = VerifyStatus::Verified;
  return cert;
}

EvalFormCertificate kohlberg_neyman_form(const Operator& op,
                                         const HemiMetric& metric,
                                         const Eigen::VectorXd& anchor,
                                         double rate, int horizon) {
  EvalFormCertificate cert;
  cert.rate = rate;
  cert.anchor = anchor;
  if (horizon < 1 || anchor.size() != op.point_size()) {
    cert.reason = "bad anchor or horizon";
    return cert;
  }
  const FormPool pool = metric_extreme_forms(op, metric);
  if (!pool.ok) {
    cert.reason = "metric has no finite extreme form set";
    return cert;
  }
  const SlopeTable table = form_slopes(op, pool.forms, anchor, horizon);
  if (table.ran == 0) {
    cert.reason = "orbit left the representable range immediately";
    return cert;
  }

  // minslope >= rate - tol certifies phi(T^k x) >= phi(x) + k rate - k tol.
  const double tol = 1e-9 * std::max(1.0, std::abs(rate));
  std::size_t pick = 0;
  for (std::size_t i = 1; i < pool.forms.size(); ++i)
    if (table.minslope[i] > table.minslope[pick] + 1e-15) pick = i;

  cert.kind = pool.kind;
  cert.form = pool.forms[pick];
  cert.form_index = static_cast<int>(pick);
  cert.horizon = table.ran;
  cert.worst_slack = table.minslope[pick] - rate;
  if (table.minslope[pick] >= rate - tol) {
    cert.status = VerifyStatus::Verified;
  } else {
    cert.status = VerifyStatus::Falsified;
    cert.reason = "no extreme form sustains the rate";
  }
  return cert;
}

ExtremeRayCertificate extreme_ray_certificate(const Operator& op,
                                              const Eigen::VectorXd& basepoint,
                                              const DualCertificate& dual,
                                              int horizon) {
  ExtremeRayCertificate cert;
  cert.rate = dual.rate_bound;
  if (!op.cone_operator()) {
    cert.reason = "not a cone operator";
    return cert;
  }
  if (dual.trivial || !(dual.mu > 0.0)) {
    cert.reason = "dual certificate carries no positive mu";
    return cert;
  }
  // A sub-homogeneous map can absorb any bounded pairing; only expansion
  // (mu > 1) survives the pumping argument.
  if (!op.positively_homogeneous() && !(dual.mu > 1.0)) {
    cert.reason = "sub-homogeneous operator with mu <= 1";
    return cert;
  }
  if (horizon < 4) horizon = 4;

  const ConeKind ck = op.space() == SpaceKind::StandardConeInterior
                          ? ConeKind::Standard
                          : ConeKind::Psd;
  const ConePoint base = ConePoint::from_packed(ck, basepoint);
  if (!base.interior()) {
    cert.reason = "basepoint is not interior";
    return cert;
  }
  const ConePoint u = ConePoint::from_packed(ck, dual.u);
  if (u.zero()) {
    cert.reason = "dual direction is zero";
    return cert;
  }

  cert.ray = maximizing_extreme_ray(base, u);
  cert.horizon = horizon;

  const double p0 = cert.ray.pair(base);
  // The pairing argument needs <w, x> != 0; below this threshold the
  // logarithms are noise.
  if (!(p0 > 1e-12 * basepoint.lpNorm<Eigen::Infinity>())) {
    cert.reason = "extreme ray pairs to zero at the basepoint";
    return cert;
  }
  const double v0 = std::log(p0);

  Eigen::VectorXd z = basepoint;
  double log_scale = 0.0;
  double v_mid = 0.0, v_last = 0.0;
  double worst = -kInf;
  bool alive = true;
  const int mid = horizon / 2;
  for (int k = 1; k <= horizon; ++k) {
    ExtensionResult ext;
    try {
      ext = op.radial_extension(z);
    } catch (const std::exception&) {
      alive = false;
      break;
    }
    if (!ext.converged) {
      alive = false;
      break;
    }
    z = std::move(ext.value);
    const double sc = z.lpNorm<Eigen::Infinity>();
    if (!(sc > 0.0) || !z.allFinite()) {
      alive = false;
      break;
    }
    z /= sc;
    log_scale += std::log(sc);
    const double p = cert.ray.pair(ConePoint::from_packed(ck, z));
    if (!(p > 0.0)) {
      alive = false;
      break;
    }
    const double v = log_scale + std::log(p);
    worst = std::max(worst, k * cert.rate - (v - v0));
    if (k == mid) v_mid = v;
    if (k == horizon) v_last = v;
  }
  cert.offset = worst;
  if (!alive) {
    cert.reason = "orbit left the cone before the horizon";
    return cert;
  }
  cert.tail_rate = (v_last - v_mid) / double(horizon - mid);
  if (cert.tail_rate >=
      cert.rate - 1e-7 * std::max(1.0, std::abs(cert.rate))) {
    cert.status = VerifyStatus::Verified;
  } else {
    cert.status = VerifyStatus::Falsified;
    cert.reason = "orbit pairing grows below the certified rate";
  }
  return cert;
}

}  // namespace ratecert
