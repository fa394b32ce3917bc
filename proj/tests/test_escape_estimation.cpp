#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ratecert/escape_estimation.hpp"

using namespace ratecert;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

Eigen::MatrixXd two_by_two(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

const double kLog3 = std::log(3.0);

}  // namespace

TEST_CASE("orbit rate on the worked examples") {
  // Identity (translation by zero): rate 0 at every horizon.
  {
    Operator id = Operator::translation(Eigen::VectorXd::Zero(2), MetricKind::NormSup);
    HemiMetric sup(SpaceKind::RealVectorSpace, MetricKind::NormSup, 2);
    const RateEstimate est = orbit_rate(id, sup, vec2(3, -1), 100);
    CHECK(est.upper_from_orbit == 0.0);
    CHECK(est.exact.has_value());
    CHECK(*est.exact == 0.0);
  }
  // Perron example: the orbit from the eigenvector is exact at every k.
  {
    Operator mat = Operator::nonneg_matrix(two_by_two(2, 1, 1, 2));
    HemiMetric rfunk(SpaceKind::StandardConeInterior, MetricKind::Rfunk, 2);
    const RateEstimate est = orbit_rate(mat, rfunk, vec2(1, 1), 50);
    CHECK(est.upper_from_orbit == doctest::Approx(kLog3).epsilon(1e-12));
    CHECK(est.orbit_steps == 50);
  }
  // Torus shift: rate 1 but the per-step displacement stays 1.3.
  {
    Operator sh = Operator::torus_shift(0.3, 1.0);
    HemiMetric torus(SpaceKind::TorusTimesLine, MetricKind::Torus, 2);
    OrbitTrace trace;
    const RateEstimate est = orbit_rate(sh, torus, vec2(0, 0), 10000, &trace);
    CHECK(est.upper_from_orbit >= 1.0);
    CHECK(est.upper_from_orbit <= 1.001);
    CHECK(*est.exact == doctest::Approx(1.0));
    for (int k = 0; k < trace.steps_run; ++k)
      CHECK(trace.step[k] == doctest::Approx(1.3).epsilon(1e-12));
  }
}

TEST_CASE("fekete bound stays above the true rate at every horizon") {
  struct Known {
    Operator op;
    HemiMetric metric;
    Eigen::VectorXd x0;
    double rho;
  };
  std::vector<Known> cases;
  cases.push_back({Operator::nonneg_matrix(two_by_two(2, 1, 1, 2)),
                   HemiMetric(SpaceKind::StandardConeInterior, MetricKind::Rfunk, 2),
                   vec2(5, 0.2), kLog3});
  cases.push_back({Operator::max_plus(two_by_two(-kInf, 0, 4, -kInf)),
                   HemiMetric(SpaceKind::RealVectorSpace, MetricKind::Top, 2),
                   vec2(0, 0), 2.0});
  cases.push_back({Operator::translation(vec2(1, -4), MetricKind::NormSup),
                   HemiMetric(SpaceKind::RealVectorSpace, MetricKind::NormSup, 2),
                   vec2(0, 0), 4.0});
  cases.push_back({Operator::torus_shift(0.3, 1.0),
                   HemiMetric(SpaceKind::TorusTimesLine, MetricKind::Torus, 2),
                   vec2(0.7, -2), 1.0});
  for (const Known& c : cases) {
    OrbitTrace trace;
    orbit_rate(c.op, c.metric, c.x0, 400, &trace);
    for (double rm : trace.running_min) CHECK(rm >= c.rho - 1e-9);
  }
}

TEST_CASE("orbit rate is basepoint independent up to the coupling bound") {
  Operator mat = Operator::nonneg_matrix(two_by_two(2, 1, 0.3, 1.7));
  HemiMetric rfunk(SpaceKind::StandardConeInterior, MetricKind::Rfunk, 2);
  const int k = 400;
  const Eigen::VectorXd x = vec2(1, 1);
  const Eigen::VectorXd y = vec2(40, 0.02);
  const RateEstimate ex = orbit_rate(mat, rfunk, x, k);
  const RateEstimate ey = orbit_rate(mat, rfunk, y, k);
  const double coupling =
      2.0 * (rfunk.delta(x, y) + rfunk.delta(y, x)) / double(k);
  CHECK(std::abs(ex.upper_from_orbit - ey.upper_from_orbit) <= coupling + 1e-9);
}

TEST_CASE("y_alpha path on the translation example") {
  // T(y) = y + 2 on the line with straight-line geodesics from 0:
  // T(r^alpha(y)) = alpha y + 2, fixed point 2/(1-alpha). At alpha = 1/2 the
  // fixed point is 4 and the displacement is the shift itself.
  Operator tr = Operator::translation(Eigen::VectorXd::Constant(1, 2.0), MetricKind::NormSup);
  HemiMetric sup(SpaceKind::RealVectorSpace, MetricKind::NormSup, 1);
  GeodesicFamily fam(GeodesicKind::StraightLine, sup, Eigen::VectorXd::Zero(1));
  const std::vector<DampedPoint> path = y_alpha_path(tr, fam, sup, 6);
  REQUIRE(!path.empty());
  CHECK(path.front().alpha == doctest::Approx(0.5));
  CHECK(path.front().y(0) == doctest::Approx(4.0).epsilon(1e-6));
  for (const DampedPoint& p : path) {
    CHECK(p.converged);
    CHECK(p.displacement == doctest::Approx(2.0).epsilon(1e-6));
    // the a-posteriori contraction bound held at termination
    CHECK(p.residual <= 1e-9 * (1.0 - p.alpha) + 1e-15);
  }
}

TEST_CASE("y_alpha path is stationary for the identity") {
  Operator id = Operator::translation(Eigen::VectorXd::Zero(2), MetricKind::NormSup);
  HemiMetric sup(SpaceKind::RealVectorSpace, MetricKind::NormSup, 2);
  GeodesicFamily fam(GeodesicKind::StraightLine, sup, vec2(1, -1));
  const std::vector<DampedPoint> path = y_alpha_path(id, fam, sup, 5);
  REQUIRE(!path.empty());
  for (const DampedPoint& p : path) {
    CHECK((p.y - vec2(1, -1)).lpNorm<Eigen::Infinity>() < 1e-9);
    CHECK(p.displacement < 1e-9);
  }
}

TEST_CASE("y_alpha displacements approach the perron rate") {
  Operator mat = Operator::nonneg_matrix(two_by_two(2, 1, 1, 2));
  HemiMetric rfunk(SpaceKind::StandardConeInterior, MetricKind::Rfunk, 2);
  GeodesicFamily fam(GeodesicKind::GeometricMean, rfunk, vec2(1, 3));
  // The fixed-point scale grows like 3^(2^j), so the path stops a couple of
  // levels before coordinate overflow; six converged levels are guaranteed.
  const std::vector<DampedPoint> path = y_alpha_path(mat, fam, rfunk, 10);
  REQUIRE(path.size() >= 6);
  // The gap closes linearly in 1 - alpha; the constant depends on how far
  // the center sits from the Perron ray.
  CHECK(path[5].alpha == doctest::Approx(1.0 - std::ldexp(1.0, -6)));
  CHECK(std::abs(path[5].displacement - kLog3) < 5e-3);
  CHECK(std::abs(path.back().displacement - kLog3) < 4e-3);
  for (std::size_t j = 1; j < path.size(); ++j)
    CHECK(path[j].displacement <= path[j - 1].displacement + 1e-12);
  // Lemma 2.12 side: displacements never dip below the rate.
  for (const DampedPoint& p : path) CHECK(p.displacement >= kLog3 - 1e-9);
}

TEST_CASE("displacement descent tightens the upper bound") {
  Operator mat = Operator::nonneg_matrix(two_by_two(2, 1, 1, 2));
  HemiMetric rfunk(SpaceKind::StandardConeInterior, MetricKind::Rfunk, 2);
  const DisplacementProbe probe = displacement_descent(mat, rfunk, vec2(9, 0.5));
  CHECK(probe.value >= kLog3 - 1e-9);
  CHECK(probe.value <= kLog3 + 1e-3);
}

TEST_CASE("estimate_rate bundles consistent bounds") {
  Operator mat = Operator::nonneg_matrix(two_by_two(2, 1, 1, 2));
  HemiMetric rfunk(SpaceKind::StandardConeInterior, MetricKind::Rfunk, 2);
  const RateEstimate est = estimate_rate(mat, rfunk, vec2(3, 1), 300);
  CHECK(est.lower_from_order <= est.upper_from_orbit + 1e-9);
  CHECK(est.upper_from_point <= est.upper_from_orbit + 1e-9);
  CHECK(est.upper_from_point == doctest::Approx(kLog3).epsilon(1e-6));
  // The order bound is sound (never above the rate) and closes like 1/k.
  CHECK(est.lower_from_order <= kLog3 + 1e-9);
  CHECK(est.lower_from_order >= kLog3 - 0.01);
  CHECK(!est.probes.empty());
  CHECK(est.best_point.size() == 2);

  Operator mp = Operator::max_plus(two_by_two(-kInf, 0, 4, -kInf));
  HemiMetric top(SpaceKind::RealVectorSpace, MetricKind::Top, 2);
  const RateEstimate em = estimate_rate(mp, top, vec2(0, 0), 200);
  REQUIRE(em.exact.has_value());
  CHECK(*em.exact == doctest::Approx(2.0));
  CHECK(em.upper_from_orbit >= 2.0 - 1e-9);
}

TEST_CASE("torus gap: rho strictly below rho-bar without star-shapedness") {
  Operator sh = Operator::torus_shift(0.3, 1.0);
  HemiMetric torus(SpaceKind::TorusTimesLine, MetricKind::Torus, 2);
  const RateEstimate est = estimate_rate(sh, torus, vec2(0, 0), 10000);
  CHECK(est.upper_from_orbit <= 1.0005);
  // Displacement is constant: no probe can do better than 1.3.
  CHECK(est.upper_from_point == doctest::Approx(1.3).epsilon(1e-12));
  CHECK(est.upper_from_point - est.upper_from_orbit > 0.29);
}

TEST_CASE("martin kernel snapshots") {
  // On the line.
  HemiMetric sup(SpaceKind::RealVectorSpace, MetricKind::NormSup, 1);
  MartinKernel i_y(sup, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 10.0));
  CHECK(i_y(Eigen::VectorXd::Zero(1)) == 0.0);
  CHECK(i_y(Eigen::VectorXd::Constant(1, 3.0)) == doctest::Approx(3.0));
  CHECK(i_y.base_value() == doctest::Approx(10.0));

  // On the cone under rfunk.
  HemiMetric rfunk(SpaceKind::StandardConeInterior, MetricKind::Rfunk, 2);
  MartinKernel i_c = martin_kernel_snapshot(rfunk, vec2(1, 1), vec2(4, 1));
  CHECK(i_c(vec2(1, 1)) == 0.0);
  CHECK(i_c(vec2(2, 1)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // 1-Lipschitz: i(y)(a) - i(y)(b) = delta(b,y) - delta(a,y) <= delta(b,a).
  Rng rng(33);
  for (int t = 0; t < 50; ++t) {
    MartinKernel ker(rfunk, rfunk.sample_point(rng), rfunk.sample_point(rng));
    for (int s = 0; s < 100; ++s) {
      const Eigen::VectorXd a = rfunk.sample_point(rng);
      const Eigen::VectorXd b = rfunk.sample_point(rng);
      CHECK(ker(a) - ker(b) <= rfunk.delta(b, a) + 1e-9);
    }
  }
}

TEST_CASE("pumping along the perron martin function") {
  // h built from the limiting y_alpha direction (the Perron ray) satisfies
  // h(T^k x) >= h(x) + k rho for the verified rate.
  Operator mat = Operator::nonneg_matrix(two_by_two(2, 1, 1, 2));
  HemiMetric rfunk(SpaceKind::StandardConeInterior, MetricKind::Rfunk, 2);
  GeodesicFamily fam(GeodesicKind::GeometricMean, rfunk, vec2(1, 3));
  const std::vector<DampedPoint> path = y_alpha_path(mat, fam, rfunk, 12);
  REQUIRE(!path.empty());
  Eigen::VectorXd u = path.back().direction;
  REQUIRE(u.size() == 2);

  ConeMartinFunction h(MartinVariant::Rfunk, ConePoint::standard(u),
                       ConePoint::standard(vec2(1, 3)));
  // Truncation error of the alpha path enters the slack linearly in k.
  const double dir_err = (u / u.maxCoeff() - vec2(1, 1)).lpNorm<Eigen::Infinity>();
  const double tol0 = 2.0 * dir_err + 1e-9;
  Eigen::VectorXd x = vec2(0.2, 5);
  const double h0 = martin_value(h, ConePoint::standard(x));
  double log_scale = 0.0;
  for (int k = 1; k <= 100; ++k) {
    x = mat.apply(x);
    const double sc = x.maxCoeff();
    x /= sc;
    log_scale += std::log(sc);
    // martin_value of the renormalized point, shifted back by the scale.
    const double hk = martin_value(h, ConePoint::standard(x)) + log_scale;
    CHECK(hk - h0 - double(k) * kLog3 >= -(tol0 * k + 1e-9));
  }
}
