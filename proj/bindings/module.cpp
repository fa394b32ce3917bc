#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <stdexcept>
#include <string>

#include "ratecert/cli_io.hpp"
#include "ratecert/cone_geometry.hpp"

namespace py = pybind11;
using namespace ratecert;

namespace {

MetricKind metric_from_name(const std::string& s) {
  if (s == "norm-sup") return MetricKind::NormSup;
  if (s == "norm-l2") return MetricKind::NormL2;
  if (s == "top") return MetricKind::Top;
  if (s == "bottom") return MetricKind::Bottom;
  if (s == "rfunk") return MetricKind::Rfunk;
  if (s == "rfunk-plus") return MetricKind::RfunkPlus;
  if (s == "thompson") return MetricKind::Thompson;
  if (s == "hilbert") return MetricKind::Hilbert;
  if (s == "delta-nu") return MetricKind::DeltaNu;
  if (s == "torus") return MetricKind::Torus;
  throw std::invalid_argument("unknown metric kind '" + s + "'");
}

SpaceKind space_from_name(const std::string& s) {
  if (s == "standard-cone-interior") return SpaceKind::StandardConeInterior;
  if (s == "psd-cone-interior") return SpaceKind::PsdConeInterior;
  if (s == "real-vector-space") return SpaceKind::RealVectorSpace;
  if (s == "torus-times-line") return SpaceKind::TorusTimesLine;
  throw std::invalid_argument("unknown space '" + s + "'");
}

std::optional<NuKind> nu_from_name(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "max-abs") return NuKind::MaxAbs;
  if (s == "spread") return NuKind::Spread;
  if (s == "max") return NuKind::Max;
  if (s == "max-plus") return NuKind::MaxPlus;
  throw std::invalid_argument("unknown nu kind '" + s + "'");
}

// Points arrive as numpy arrays: square matrices for the PSD cone, flat
// vectors elsewhere. Internally everything is a packed vector.
Eigen::VectorXd pack_point(SpaceKind space, const Eigen::MatrixXd& p) {
  if (space == SpaceKind::PsdConeInterior) {
    if (p.rows() != p.cols())
      throw std::invalid_argument("PSD points must be square matrices");
    return Eigen::Map<const Eigen::VectorXd>(p.data(), p.size());
  }
  if (p.rows() != 1 && p.cols() != 1)
    throw std::invalid_argument("expected a flat vector for this space");
  return p.rows() == 1 ? Eigen::VectorXd(p.transpose()) : Eigen::VectorXd(p);
}

py::object unpack_point(SpaceKind space, const Eigen::VectorXd& packed) {
  if (space == SpaceKind::PsdConeInterior) {
    const int n = static_cast<int>(std::lround(std::sqrt(double(packed.size()))));
    Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(packed.data(), n, n);
    return py::cast(m);
  }
  return py::cast(packed);
}

ConePoint cone_point(const Eigen::MatrixXd& p) {
  if (p.rows() > 1 && p.cols() > 1) {
    if (p.rows() != p.cols())
      throw std::invalid_argument("PSD points must be square matrices");
    return ConePoint::psd(p);
  }
  const Eigen::VectorXd v = p.rows() == 1 ? Eigen::VectorXd(p.transpose())
                                          : Eigen::VectorXd(p);
  return ConePoint::standard(v);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "escape rates of non-expansive maps: gauges, geodesics, certificates";
#ifdef RATECERT_VERSION_STRING
  m.attr("__version__") = RATECERT_VERSION_STRING;
#else
  m.attr("__version__") = kToolVersion;
#endif

  m.def(
      "delta",
      [](const std::string& space, const std::string& metric, int dimension,
         const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
         const std::string& nu) {
        const SpaceKind sp = space_from_name(space);
        const HemiMetric hm(sp, metric_from_name(metric), dimension,
                            nu_from_name(nu));
        return hm.delta(pack_point(sp, x), pack_point(sp, y));
      },
      py::arg("space"), py::arg("metric"), py::arg("dimension"), py::arg("x"),
      py::arg("y"), py::arg("nu") = "",
      "Hemi-metric delta(x, y); PSD points are square matrices.");

  m.def(
      "gauge_M",
      [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
        return gauge_M(cone_point(x), cone_point(y));
      },
      py::arg("x"), py::arg("y"),
      "Cone gauge M(y/x) = inf{t > 0 : t x >= y}.");

  m.def(
      "gauge_m",
      [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
        return gauge_m(cone_point(x), cone_point(y));
      },
      py::arg("x"), py::arg("y"),
      "Cone gauge m(y/x) = sup{t > 0 : t x <= y}.");

  m.def(
      "geodesic_point",
      [](const std::string& family, const std::string& space,
         const std::string& metric, int dimension, const Eigen::MatrixXd& center,
         const Eigen::MatrixXd& y, double s, const std::string& nu) {
        const SpaceKind sp = space_from_name(space);
        const HemiMetric hm(sp, metric_from_name(metric), dimension,
                            nu_from_name(nu));
        GeodesicKind gk;
        if (family == "straight-line") gk = GeodesicKind::StraightLine;
        else if (family == "thompson-straight") gk = GeodesicKind::ThompsonStraight;
        else if (family == "geometric-mean") gk = GeodesicKind::GeometricMean;
        else throw std::invalid_argument("unknown geodesic family '" + family + "'");
        const GeodesicFamily g(gk, hm, pack_point(sp, center));
        return unpack_point(sp, g.point_at(pack_point(sp, y), s));
      },
      py::arg("family"), py::arg("space"), py::arg("metric"),
      py::arg("dimension"), py::arg("center"), py::arg("y"), py::arg("s"),
      py::arg("nu") = "",
      "Point at parameter s on the geodesic from center to y.");

  m.def("karp_cycle_mean", &karp_cycle_mean, py::arg("weights"),
        "Maximum cycle mean of a weighted digraph (-inf marks absent edges).");

  m.def(
      "martin_value",
      [](const std::string& variant, const Eigen::MatrixXd& u,
         const Eigen::MatrixXd& basepoint, const Eigen::MatrixXd& x) {
        MartinVariant v;
        if (variant == "rfunk") v = MartinVariant::Rfunk;
        else if (variant == "rfunk-plus") v = MartinVariant::RfunkPlus;
        else throw std::invalid_argument("unknown martin variant '" + variant + "'");
        const ConeMartinFunction h(v, cone_point(u), cone_point(basepoint));
        return martin_value(h, cone_point(x));
      },
      py::arg("variant"), py::arg("u"), py::arg("basepoint"), py::arg("x"),
      "Martin function value h(x) = delta(basepoint, u) - delta(x, u).");

  m.def(
      "matrix_game_value",
      [](const Eigen::MatrixXd& payoff) {
        const MatrixGameSolution sol = matrix_game_value(payoff);
        return py::make_tuple(sol.value, sol.row_strategy, sol.col_strategy);
      },
      py::arg("payoff"),
      "Zero-sum matrix game: (value, row_strategy, col_strategy).");

  m.def(
      "rate_report_json",
      [](const std::string& problem_json) {
        const Json doc = Json::parse(problem_json);
        return dump_report(run_rate(doc).doc);
      },
      py::arg("problem_json"),
      "Run the rate pipeline on a problem JSON string; returns the report.");

  m.def(
      "shapley_apply",
      [](const std::string& game_json, const Eigen::VectorXd& x) {
        const GameSpec game = parse_game(Json::parse(game_json), "game");
        return shapley_apply(game, x);
      },
      py::arg("game_json"), py::arg("x"),
      "One Shapley operator step for the game given as a JSON string.");
}
