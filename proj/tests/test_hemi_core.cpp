#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ratecert/hemi_core.hpp"

using namespace ratecert;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

Eigen::VectorXd packed_diag(double a, double b) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return Eigen::Map<Eigen::VectorXd>(m.data(), 4);
}

}  // namespace

TEST_CASE("delta on the worked examples") {
  HemiMetric rfunk(SpaceKind::StandardConeInterior, MetricKind::Rfunk, 2);
  CHECK(rfunk.delta(vec2(1, 2), vec2(3, 4)) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  // Reverse direction is negative: hemi, not a metric.
  CHECK(rfunk.delta(vec2(3, 4), vec2(1, 2)) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

  HemiMetric top(SpaceKind::RealVectorSpace, MetricKind::Top, 2);
  CHECK(top.delta(vec2(0, 0), vec2(1, -5)) == doctest::Approx(1.0));
  CHECK(top.delta(vec2(1, -5), vec2(0, 0)) == doctest::Approx(5.0));

  HemiMetric thomp(SpaceKind::StandardConeInterior, MetricKind::Thompson, 2);
  CHECK(thomp.delta(vec2(1, 1), vec2(2, 0.5)) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  HemiMetric torus(SpaceKind::TorusTimesLine, MetricKind::Torus, 2);
  CHECK(torus.delta(vec2(0.1, 0), vec2(0.3, 2)) == doctest::Approx(2.2).epsilon(1e-12));
  // Wraparound side of the circle distance.
  CHECK(torus.delta(vec2(0.05, 0), vec2(0.9, 0)) == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("induced metric symmetrizes delta") {
  HemiMetric rfunk(SpaceKind::StandardConeInterior, MetricKind::Rfunk, 2);
  CHECK(rfunk.induced(vec2(1, 1), vec2(std::exp(1.0), 1)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rfunk.induced(vec2(1, 2), vec2(1, 2)) == 0.0);
  CHECK(rfunk.induced(vec2(1, 2), vec2(3, 4)) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(rfunk.induced(vec2(3, 4), vec2(1, 2)) == rfunk.induced(vec2(1, 2), vec2(3, 4)));

  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const Eigen::VectorXd x = rfunk.sample_point(rng);
    const Eigen::VectorXd y = rfunk.sample_point(rng);
    const double d = rfunk.induced(x, y);
    CHECK(d >= 0.0);
    if ((x - y).norm() > 1e-10) CHECK(d > 0.0);
  }
}

TEST_CASE("hemi-norm evaluation and extreme forms") {
  const HemiNorm sup = HemiNorm::sup(2);
  const HemiNorm top = HemiNorm::top(2);
  const HemiNorm bot = HemiNorm::bottom(2);
  CHECK(sup.evaluate(vec2(1, -5)) == doctest::Approx(5.0));
  CHECK(top.evaluate(vec2(1, -5)) == doctest::Approx(1.0));
  CHECK(bot.evaluate(vec2(1, -5)) == doctest::Approx(5.0));
  CHECK(sup.extreme_forms().size() == 4);
  CHECK(top.extreme_forms().size() == 2);

  Eigen::MatrixXd forms(2, 2);
  forms << 1, 0, 0.5, 0.5;
  const HemiNorm cus = HemiNorm::custom(forms);
  CHECK(cus.evaluate(vec2(1, 3)) == doctest::Approx(2.0));
  // evaluate is the max over the stored forms, exactly.
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd z = vec2(rng.normal(), rng.normal());
    double best = -kInf;
    for (const auto& phi : cus.extreme_forms()) best = std::max(best, phi.dot(z));
    CHECK(cus.evaluate(z) == best);
  }
}

TEST_CASE("geodesic points") {
  HemiMetric thomp(SpaceKind::PsdConeInterior, MetricKind::Thompson, 2);
  GeodesicFamily gm(GeodesicKind::GeometricMean, thomp, packed_diag(1, 1));
  Eigen::VectorXd mid = gm.point_at(packed_diag(4, 9), 0.5);
  CHECK((mid - packed_diag(2, 3)).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((gm.point_at(packed_diag(4, 9), 0.0) - gm.center()).norm() < 1e-14);
  CHECK((gm.point_at(packed_diag(4, 9), 1.0) - packed_diag(4, 9)).norm() < 1e-12);

  GeodesicFamily gm2(GeodesicKind::GeometricMean, thomp, packed_diag(1, 4));
  Eigen::VectorXd mid2 = gm2.point_at(packed_diag(4, 4), 0.5);
  CHECK((mid2 - packed_diag(2, 4)).lpNorm<Eigen::Infinity>() < 1e-12);

  HemiMetric sup(SpaceKind::RealVectorSpace, MetricKind::NormSup, 2);
  GeodesicFamily line(GeodesicKind::StraightLine, sup, vec2(0, 0));
  CHECK((line.point_at(vec2(2, -4), 0.25) - vec2(0.5, -1)).norm() < 1e-14);
}

TEST_CASE("geodesic identity along the geometric-mean family") {
  // delta(gamma(s), gamma(t)) = (t - s) delta(center, y) for the gauge
  // metrics on the PSD cone.
  for (MetricKind mk : {MetricKind::Thompson, MetricKind::Rfunk,
                        MetricKind::RfunkPlus, MetricKind::Hilbert}) {
    HemiMetric m(SpaceKind::PsdConeInterior, mk, 2);
    GeodesicFamily fam(GeodesicKind::GeometricMean, m, packed_diag(1, 1));
    SamplePlan plan;
    plan.seed = 11;
    plan.count = 2000;
    const ViolationReport rep = check_geodesic_identity(fam, plan);
    INFO(to_string(mk), " max excess ", rep.max_excess);
    CHECK(rep.clean());
  }
}

TEST_CASE("triangle inequality across all metric kinds") {
  std::vector<HemiMetric> metrics;
  for (MetricKind mk : {MetricKind::Rfunk, MetricKind::RfunkPlus,
                        MetricKind::Thompson, MetricKind::Hilbert})
    metrics.emplace_back(SpaceKind::StandardConeInterior, mk, 3);
  for (MetricKind mk : {MetricKind::Rfunk, MetricKind::Thompson})
    metrics.emplace_back(SpaceKind::PsdConeInterior, mk, 2);
  for (NuKind nu : {NuKind::MaxAbs, NuKind::Spread, NuKind::Max, NuKind::MaxPlus})
    metrics.emplace_back(SpaceKind::PsdConeInterior, MetricKind::DeltaNu, 2, nu);
  for (MetricKind mk : {MetricKind::NormSup, MetricKind::NormL2, MetricKind::Top,
                        MetricKind::Bottom})
    metrics.emplace_back(SpaceKind::RealVectorSpace, mk, 3);
  metrics.emplace_back(SpaceKind::TorusTimesLine, MetricKind::Torus, 2);

  for (const HemiMetric& m : metrics) {
    SamplePlan plan;
    plan.seed = 99;
    plan.count = 10000;
    const ViolationReport rep = check_triangle(m, plan);
    INFO(to_string(m.kind()), " on ", to_string(m.space()), " max excess ",
         rep.max_excess);
    CHECK(rep.clean());
    CHECK(rep.count_checked == 10000);
  }
}

TEST_CASE("rfunk-plus truncates rfunk at zero, exactly") {
  HemiMetric rfunk(SpaceKind::StandardConeInterior, MetricKind::Rfunk, 3);
  HemiMetric plus(SpaceKind::StandardConeInterior, MetricKind::RfunkPlus, 3);
  Rng rng(21);
  for (int i = 0; i < 2000; ++i) {
    const Eigen::VectorXd x = rfunk.sample_point(rng);
    const Eigen::VectorXd y = rfunk.sample_point(rng);
    CHECK(plus.delta(x, y) == std::max(rfunk.delta(x, y), 0.0));
  }
}

TEST_CASE("delta-nu reduces to the named gauge metrics") {
  HemiMetric thomp(SpaceKind::PsdConeInterior, MetricKind::Thompson, 2);
  HemiMetric hilb(SpaceKind::PsdConeInterior, MetricKind::Hilbert, 2);
  HemiMetric rfunk(SpaceKind::PsdConeInterior, MetricKind::Rfunk, 2);
  HemiMetric nu_maxabs(SpaceKind::PsdConeInterior, MetricKind::DeltaNu, 2, NuKind::MaxAbs);
  HemiMetric nu_spread(SpaceKind::PsdConeInterior, MetricKind::DeltaNu, 2, NuKind::Spread);
  HemiMetric nu_max(SpaceKind::PsdConeInterior, MetricKind::DeltaNu, 2, NuKind::Max);
  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    const Eigen::VectorXd x = thomp.sample_point(rng);
    const Eigen::VectorXd y = thomp.sample_point(rng);
    CHECK(nu_maxabs.delta(x, y) == doctest::Approx(thomp.delta(x, y)).epsilon(1e-10));
    CHECK(nu_spread.delta(x, y) == doctest::Approx(hilb.delta(x, y)).epsilon(1e-10));
    CHECK(nu_max.delta(x, y) == doctest::Approx(rfunk.delta(x, y)).epsilon(1e-10));
  }
}

TEST_CASE("separation holds except for hilbert") {
  HemiMetric hilb(SpaceKind::StandardConeInterior, MetricKind::Hilbert, 3);
  CHECK_FALSE(hilb.weakly_separating());
  // Hilbert vanishes on rays: scaling a point is free.
  Eigen::VectorXd x(3);
  x << 1, 2, 3;
  CHECK(hilb.induced(x, 2.0 * x) < 1e-14);

  for (MetricKind mk : {MetricKind::Rfunk, MetricKind::Thompson}) {
    HemiMetric m(SpaceKind::StandardConeInterior, mk, 3);
    CHECK(m.weakly_separating());
    SamplePlan plan;
    plan.seed = 4;
    plan.count = 5000;
    CHECK(check_separation(m, plan).clean());
  }
}

TEST_CASE("star-shaped sampling: positives and the known negative") {
  // Straight lines in a Banach space.
  {
    HemiMetric sup(SpaceKind::RealVectorSpace, MetricKind::NormSup, 3);
    GeodesicFamily fam(GeodesicKind::StraightLine, sup, Eigen::VectorXd::Zero(3));
    SamplePlan plan;
    plan.seed = 8;
    plan.count = 1000;
    CHECK(check_star_shaped(fam, plan).clean());
  }
  // Geometric-mean geodesics on the PSD cone.
  {
    HemiMetric thomp(SpaceKind::PsdConeInterior, MetricKind::Thompson, 2);
    GeodesicFamily fam(GeodesicKind::GeometricMean, thomp, packed_diag(1, 1));
    SamplePlan plan;
    plan.seed = 8;
    plan.count = 10000;
    const ViolationReport rep = check_star_shaped(fam, plan);
    INFO("max excess ", rep.max_excess);
    CHECK(rep.clean());
  }
  // Additive straight lines break Thompson convexity on the orthant.
  {
    HemiMetric thomp(SpaceKind::StandardConeInterior, MetricKind::Thompson, 3);
    Eigen::VectorXd center = Eigen::VectorXd::Ones(3);
    GeodesicFamily fam(GeodesicKind::ThompsonStraight, thomp, center);
    SamplePlan plan;
    plan.seed = 8;
    plan.count = 10000;
    plan.tol = 1e-3;
    const ViolationReport rep = check_star_shaped(fam, plan);
    CHECK_FALSE(rep.clean());
    CHECK(rep.max_excess > 1e-3);
  }
}

TEST_CASE("custom hemi-norm metric rejects mismatched points") {
  Eigen::MatrixXd forms(2, 2);
  forms << 1, 0, -1, 2;
  HemiMetric m = HemiMetric::custom_norm(HemiNorm::custom(forms));
  CHECK(m.delta(vec2(0, 0), vec2(3, 1)) == doctest::Approx(3.0));
  Eigen::VectorXd bad(3);
  bad << 1, 2, 3;
  CHECK_THROWS(m.delta(bad, bad));
  // A dual set that cannot separate is refused at construction.
  Eigen::MatrixXd degenerate(1, 2);
  degenerate << 1, -1;
  CHECK_THROWS(HemiNorm::custom(degenerate));
}
