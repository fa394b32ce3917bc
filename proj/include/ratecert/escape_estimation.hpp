#pragma once

#include <optional>
#include <vector>

#include "ratecert/cone_geometry.hpp"
#include "ratecert/operator_library.hpp"

namespace ratecert {

struct DampedPoint {
  double alpha = 0.0;
  Eigen::VectorXd y;
  Eigen::VectorXd direction;   // y at unit sup norm (cone spaces)
  double displacement = kInf;  // delta(y, T y)
  double residual = kInf;      // d(y_m, y_{m+1}) at the last iteration
  int iterations = 0;
  bool converged = false;
};

// Fixed points of x -> T(gamma_x(alpha)) along the family's geodesics, for
// alpha = 1 - 2^{-j}, each level warm-started from the previous one. A level
// stops once the induced-metric residual drops below stop_tol * (1 - alpha);
// the path stops when a level diverges or the shared budget runs out.
std::vector<DampedPoint> y_alpha_path(const Operator& op,
                                      const GeodesicFamily& family,
                                      const HemiMetric& metric,
                                      int max_levels = 20,
                                      long iteration_budget = 60000,
                                      double stop_tol = 1e-9);

struct DisplacementProbe {
  Eigen::VectorXd point;
  double value = kInf;
};

// Local descent on y -> delta(y, T y): multiplicative coordinate moves on
// cone points, additive moves elsewhere, step halving when stuck.
DisplacementProbe displacement_descent(const Operator& op,
                                       const HemiMetric& metric,
                                       const Eigen::VectorXd& start,
                                       int iterations = 200);

// Exact escape rate for the operator/metric pairs that admit one
// (translations under the norm metrics, torus shifts, max-plus via the
// maximum cycle mean, single-state Shapley operators).
std::optional<double> closed_form_rate(const Operator& op,
                                       const HemiMetric& metric);

struct RateEstimate {
  double upper_from_orbit = kInf;   // min_k delta(x0, T^k x0) / k
  double upper_from_point = kInf;   // best probed displacement
  double lower_from_order = -kInf;  // orbit order bound where it is sound
  double lower_from_certificate = -kInf;  // filled by the certificate layer
  std::optional<double> exact;      // closed-form rate when available
  int horizon = 0;
  int orbit_steps = 0;
  bool orbit_truncated = false;
  Eigen::VectorXd best_point;       // argmin of the displacement probes
  std::vector<Eigen::VectorXd> probes;  // candidate points for certificates
};

// Orbit-only estimate: Fekete upper bound, the order lower bound where it
// is sound, snapshot displacements. Pass trace_out to keep the raw orbit.
RateEstimate orbit_rate(const Operator& op, const HemiMetric& metric,
                        const Eigen::VectorXd& x0, int horizon,
                        OrbitTrace* trace_out = nullptr);

// Full bundle: orbit_rate plus displacement descent and the y_alpha path.
RateEstimate estimate_rate(const Operator& op, const HemiMetric& metric,
                           const Eigen::VectorXd& x0, int horizon);

// Martin kernel toward y: i(y)(v) = delta(basepoint, y) - delta(v, y).
// Vanishes at the basepoint and is 1-Lipschitz for delta in v.
class MartinKernel {
 public:
  MartinKernel(HemiMetric metric, Eigen::VectorXd basepoint, Eigen::VectorXd y);
  double operator()(const Eigen::VectorXd& v) const;
  double base_value() const { return base_; }  // delta(basepoint, y)

 private:
  HemiMetric metric_;
  Eigen::VectorXd y_;
  double base_ = 0.0;
};

MartinKernel martin_kernel_snapshot(const HemiMetric& metric,
                                    const Eigen::VectorXd& basepoint,
                                    const Eigen::VectorXd& y);

}  // namespace ratecert
