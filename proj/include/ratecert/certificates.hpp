#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ratecert/cone_geometry.hpp"
#include "ratecert/escape_estimation.hpp"

namespace ratecert {

enum class VerifyStatus { Verified, Falsified, Inconclusive };

std::string to_string(VerifyStatus s);

// Pumped inequality T^k(u) >= mu^k u along the radial-extension orbit,
// slack measured on a log scale with tolerance tol * k * max(1, |log mu|).
struct PumpingCheck {
  int steps = 0;
  double worst_slack = 0.0;  // most negative margin encountered
  bool passed = false;
};

// T(y) <= mu y at an interior point certifies an upper bound on the rate:
// log mu under a homogeneous operator, max(log mu, 0) under a merely
// sub-homogeneous one.
struct PrimalCertificate {
  Eigen::VectorXd y;
  double mu = kInf;
  double rate_bound = kInf;
  bool homogeneous_rule = false;
  double observed = kInf;   // gauge_M(y, T y)
  double slack = -kInf;     // mu - observed
  VerifyStatus status = VerifyStatus::Inconclusive;
  std::string reason;
};

// T_r(u) >= mu u for the recession map certifies rho >= log mu.
struct DualCertificate {
  Eigen::VectorXd u;
  double mu = 0.0;
  double rate_bound = -kInf;
  Eigen::VectorXd recession_at_u;
  double observed = 0.0;    // gauge_m(T_r(u) / u)
  double slack = 0.0;       // observed - mu
  bool trivial = true;      // mu = 0: no information
  VerifyStatus status = VerifyStatus::Inconclusive;
  std::string reason;
  PumpingCheck pumping;
};

// One-step check of T(y) <= mu y; the k-step version follows from
// monotonicity, so nothing more is pumped here.
PrimalCertificate verify_primal(const Operator& op, const Eigen::VectorXd& y,
                                double mu, double tol = 1e-9);

// Checks gauge_m(T_r(u) / u) >= mu and pumps the radial-extension orbit for
// k_max steps. A pumping failure after a passing one-step check means the
// recession value cannot be trusted, so the status degrades to inconclusive
// rather than falsified.
DualCertificate verify_dual(const Operator& op, const Eigen::VectorXd& u,
                            double mu, int k_max = 20, double tol = 1e-9);

// Whether the one-sided primal inequality controls the rate under this
// metric (rfunk, rfunk-plus, delta-nu max / max-plus) for this operator.
bool primal_bound_applies(const Operator& op, const HemiMetric& metric);
// Whether log mu from a dual certificate bounds the rate from below under
// this metric (everything except hilbert and delta-nu spread).
bool dual_bound_applies(const HemiMetric& metric);

// Certificate searches over candidate points. Both refine candidates by
// power iteration of the (extended) operator, and the dual search adds
// boundary sharpenings of every candidate, so recession directions that
// only pay off on a face of the cone are found. Deterministic: ties keep
// the earliest candidate. The dual search never fails, it degrades to the
// trivial mu = 0 certificate with the reason recorded.
std::optional<PrimalCertificate> search_primal(
    const Operator& op, const HemiMetric& metric,
    const std::vector<Eigen::VectorXd>& candidates);
DualCertificate search_dual(const Operator& op, const HemiMetric& metric,
                            const std::vector<Eigen::VectorXd>& candidates);

// Coordinate-face truncations of a cone point at relative thresholds
// {1e-3, 1e-6, 1e-9}; used by the dual search and exposed for tests.
std::vector<Eigen::VectorXd> boundary_sharpenings(SpaceKind space,
                                                  const Eigen::VectorXd& x);

enum class EvalFormKind { Coordinate, DualBall, ExtremeRay };

// A linear form phi from the extreme set of the hemi-norm together with the
// pumped growth inequality phi(T^k x) >= phi(x) + k * rate - tol along the
// orbit from the anchor. Exact at a bias-type anchor and otherwise a
// finite-horizon statement only; the horizon is part of the certificate.
struct EvalFormCertificate {
  EvalFormKind kind = EvalFormKind::Coordinate;
  Eigen::VectorXd form;
  int form_index = -1;
  double rate = -kInf;
  int horizon = 0;
  double worst_slack = 0.0;  // min_k phi(T^k x) - phi(x) - k * rate
  Eigen::VectorXd anchor;
  VerifyStatus status = VerifyStatus::Inconclusive;
  std::string reason;
};

// Best achievable rate over the extreme forms of the metric's hemi-norm:
// maximizes min_{k <= horizon} phi(T^k x - x)/k. Returns nothing when the
// metric has no finite extreme set (l2) or the space is not a vector space.
std::optional<EvalFormCertificate> kohlberg_neyman_form(
    const Operator& op, const HemiMetric& metric, const Eigen::VectorXd& anchor,
    int horizon);

// Target-rate version: searches the extreme forms for one satisfying the
// growth inequality at the given rate for every k <= horizon, and reports
// the best violator when none does.
EvalFormCertificate kohlberg_neyman_form(const Operator& op,
                                         const HemiMetric& metric,
                                         const Eigen::VectorXd& anchor,
                                         double rate, int horizon);

// Dual-cone extreme ray paired against the orbit from the basepoint:
// phi(T^k x)/phi(x) should grow like e^{k log mu}. Refused for
// sub-homogeneous operators unless the dual bound is positive, since the
// pairing argument needs expansion to pump.
struct ExtremeRayCertificate {
  ExtremeRay ray;
  double rate = -kInf;    // log mu being certified
  double offset = kInf;   // max_k (k rate - log phi(T^k x)/phi(x))
  double tail_rate = -kInf;
  int horizon = 0;
  VerifyStatus status = VerifyStatus::Inconclusive;
  std::string reason;
};

ExtremeRayCertificate extreme_ray_certificate(const Operator& op,
                                              const Eigen::VectorXd& basepoint,
                                              const DualCertificate& dual,
                                              int horizon = 200);

}  // namespace ratecert
