#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "ratecert/hemi_core.hpp"
#include "ratecert/stochastic_games.hpp"

namespace ratecert {

enum class OperatorKind {
  NonnegMatrix,  // x -> A x on the standard cone
  MaxPlus,       // (A x)_i = max_j a_ij + x_j on R^n
  Shapley,       // value iteration step of a zero-sum stochastic game
  Riccati,       // X -> A + M (X^{-1} + B)^{-1} M^T on the PSD cone
  Translation,   // x -> x + c on R^n
  TorusShift,    // (theta, t) -> (theta + alpha mod 1, t + drift)
  Composite,     // parts applied in listed order
};

// Outcome of a limiting computation (radial extension, recession map).
// value is the last iterate even when the schedule did not settle, so
// callers must gate on converged before trusting it.
struct ExtensionResult {
  Eigen::VectorXd value;
  bool converged = false;
  bool exact = false;        // formula evaluated directly, no limit taken
  double cross_check = 0.0;  // relative disagreement between the z schedules
  std::string note;
};

// A self-map of one of the supported spaces, on packed point vectors
// (PSD matrices column-major). Construction validates the data; apply is
// permissive about boundary points whenever the formula extends there.
class Operator {
 public:
  static Operator nonneg_matrix(const Eigen::MatrixXd& a);
  static Operator max_plus(const Eigen::MatrixXd& a);
  static Operator shapley(GameSpec game);
  static Operator riccati(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const Eigen::MatrixXd& m);
  static Operator translation(const Eigen::VectorXd& c,
                              MetricKind norm_kind = MetricKind::Top);
  static Operator torus_shift(double alpha, double drift);
  static Operator composite(std::vector<Operator> parts);

  OperatorKind kind() const { return kind_; }
  SpaceKind space() const { return space_; }
  int dimension() const { return dim_; }
  Eigen::Index point_size() const;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

  bool order_preserving() const;
  bool positively_homogeneous() const;  // T(s x) = s T(x) for s > 0
  bool sub_homogeneous() const;         // T(s x) <= s T(x) for s >= 1
  bool additively_homogeneous() const;  // T(x + c 1) = T(x) + c 1
  bool cone_operator() const;
  bool extends_continuously() const;    // apply valid on the closed cone

  MetricKind natural_metric() const;
  std::vector<MetricKind> admissible_metrics() const;

  // Radial extension to the closed cone, lim_{eps -> 0} T(x + eps z) with z
  // interior. Uses apply directly when the formula already extends (exact
  // flag set); force_limit exercises the numeric limit regardless. The limit
  // is re-run against a second interior z and the relative disagreement is
  // reported; a value is always returned, but converged is only set when the
  // schedule settled and the two z choices agree.
  ExtensionResult radial_extension(const Eigen::VectorXd& x,
                                   bool force_limit = false) const;

  // Recession map T_r(u) = inf_gamma T(gamma u) / gamma over the radial
  // extension, taken along gamma = 2^j. Requires an order-preserving sub- or
  // positively homogeneous cone operator; the net is checked to be
  // nonincreasing in cone order and a violation clears the converged flag.
  // The result may land on the boundary or vanish.
  ExtensionResult recession(const Eigen::VectorXd& u) const;

  const Eigen::MatrixXd& matrix() const;  // NonnegMatrix / MaxPlus
  const GameSpec& game() const;           // Shapley
  const Eigen::MatrixXd& riccati_a() const;
  const Eigen::MatrixXd& riccati_b() const;
  const Eigen::MatrixXd& riccati_m() const;
  double riccati_m_condition() const;     // spectral condition number of M
  const Eigen::VectorXd& shift() const;   // Translation
  double torus_alpha() const;
  double torus_drift() const;
  const std::vector<Operator>& parts() const;

 private:
  Operator() = default;
  OperatorKind kind_ = OperatorKind::Translation;
  SpaceKind space_ = SpaceKind::RealVectorSpace;
  int dim_ = 0;
  Eigen::MatrixXd a_, b_, m_;
  Eigen::VectorXd c_;
  double alpha_ = 0.0;
  double drift_ = 0.0;
  double m_condition_ = 1.0;
  MetricKind norm_kind_ = MetricKind::Top;
  std::shared_ptr<const GameSpec> game_;
  std::vector<Operator> parts_;
};

// delta(base, exp(log_scale) * x) without forming the scaled point. Gauge
// metrics shift by log_scale on the log-spectrum; other kinds require
// log_scale = 0.
double delta_scaled(const HemiMetric& metric, const Eigen::VectorXd& base,
                    const Eigen::VectorXd& x, double log_scale);

// Orbit x0, T x0, T^2 x0, ... Positively homogeneous cone operators under a
// gauge metric are renormalized every step with the scale carried in
// log-space; other orbits stop early rather than overflow or leave the
// metric's domain (truncated flag).
struct OrbitTrace {
  std::vector<double> from_start;  // delta(x0, T^k x0), k = 1..steps_run
  std::vector<double> step;        // delta(T^{k-1} x0, T^k x0)
  std::vector<double> running_min;  // min over j <= k of from_start[j] / j
  std::vector<Eigen::VectorXd> snapshots;  // renormalized points
  std::vector<double> snapshot_log_scale;
  std::vector<int> snapshot_index;
  Eigen::VectorXd last;
  double last_log_scale = 0.0;
  int steps_run = 0;
  bool truncated = false;
};

OrbitTrace run_orbit(const Operator& op, const HemiMetric& metric,
                     const Eigen::VectorXd& x0, int steps,
                     int max_snapshots = 65);

std::string to_string(OperatorKind k);

}  // namespace ratecert
