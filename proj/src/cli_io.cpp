#include "ratecert/cli_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "ratecert/cone_geometry.hpp"

namespace ratecert {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw std::invalid_argument(path + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const Json& expect_object(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  return j;
}

const Json& expect_array(const Json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

void reject_unknown(const Json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) fail(join(path, it.key()), "unknown field");
  }
}

const Json* find(const Json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const Json& require(const Json& obj, const char* key, const std::string& path) {
  const Json* j = find(obj, key);
  if (!j) fail(join(path, key), "missing required field");
  return *j;
}

std::string get_string(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

bool get_bool(const Json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected a boolean");
  return j.get<bool>();
}

int get_int(const Json& j, const std::string& path, int lo, int hi) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    fail(path, "expected an integer");
  const long long v = j.get<long long>();
  if (v < lo || v > hi)
    fail(path, "out of range [" + std::to_string(lo) + ", " +
                   std::to_string(hi) + "]");
  return static_cast<int>(v);
}

std::uint64_t get_u64(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    fail(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

Eigen::VectorXd vec_from(const Json& j, const std::string& path) {
  expect_array(j, path);
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] =
        num_from(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Eigen::MatrixXd mat_from(const Json& j, const std::string& path) {
  expect_array(j, path);
  if (j.empty()) fail(path, "matrix must have at least one row");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const Eigen::VectorXd row = vec_from(j[r], rp);
    if (r == 0) {
      cols = static_cast<std::size_t>(row.size());
      if (cols == 0) fail(rp, "matrix row is empty");
      m.resize(rows, cols);
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      fail(rp, "ragged matrix row");
    }
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

Json vec_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(json_num(v[i]));
  return out;
}

Json mat_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    out.push_back(vec_json(m.row(r).transpose()));
  return out;
}

Eigen::MatrixXd unpack_square(const Eigen::VectorXd& packed) {
  const int n = static_cast<int>(std::lround(std::sqrt(double(packed.size()))));
  return Eigen::Map<const Eigen::MatrixXd>(packed.data(), n, n);
}

Eigen::VectorXd pack_square(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

// ---- name tables ----------------------------------------------------------

MetricKind metric_kind_from(const std::string& s, const std::string& path) {
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
  fail(path, "unknown metric kind '" + s + "'");
}

NuKind nu_from(const std::string& s, const std::string& path) {
  if (s == "max-abs") return NuKind::MaxAbs;
  if (s == "spread") return NuKind::Spread;
  if (s == "max") return NuKind::Max;
  if (s == "max-plus") return NuKind::MaxPlus;
  fail(path, "unknown nu kind '" + s + "'");
}

SpaceKind space_from(const std::string& s, const std::string& path) {
  if (s == "standard-cone-interior") return SpaceKind::StandardConeInterior;
  if (s == "psd-cone-interior") return SpaceKind::PsdConeInterior;
  if (s == "real-vector-space") return SpaceKind::RealVectorSpace;
  if (s == "torus-times-line") return SpaceKind::TorusTimesLine;
  fail(path, "unknown space '" + s + "'");
}

GeodesicKind geodesic_from(const std::string& s, const std::string& path) {
  if (s == "straight-line") return GeodesicKind::StraightLine;
  if (s == "thompson-straight") return GeodesicKind::ThompsonStraight;
  if (s == "geometric-mean") return GeodesicKind::GeometricMean;
  fail(path, "unknown geodesic family '" + s + "'");
}

std::string status_name(VerifyStatus s) {
  switch (s) {
    case VerifyStatus::Verified: return "verified";
    case VerifyStatus::Falsified: return "falsified";
    case VerifyStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

}  // namespace

// ---- game serialization ---------------------------------------------------

GameSpec parse_game(const Json& j, const std::string& path) {
  expect_object(j, path);
  reject_unknown(j, path,
                 {"states", "actions_a", "actions_b", "payoff", "transition"});
  GameSpec g;
  g.states = get_int(require(j, "states", path), join(path, "states"), 1, 64);
  const auto ints_from = [&](const char* key) {
    const Json& arr = expect_array(require(j, key, path), join(path, key));
    std::vector<int> out;
    for (std::size_t i = 0; i < arr.size(); ++i)
      out.push_back(get_int(arr[i],
                            join(path, key) + "[" + std::to_string(i) + "]", 1,
                            64));
    return out;
  };
  g.actions_a = ints_from("actions_a");
  g.actions_b = ints_from("actions_b");
  if (static_cast<int>(g.actions_a.size()) != g.states)
    fail(join(path, "actions_a"), "length must equal states");
  if (static_cast<int>(g.actions_b.size()) != g.states)
    fail(join(path, "actions_b"), "length must equal states");

  const Json& pay = expect_array(require(j, "payoff", path), join(path, "payoff"));
  const Json& tr =
      expect_array(require(j, "transition", path), join(path, "transition"));
  if (static_cast<int>(pay.size()) != g.states)
    fail(join(path, "payoff"), "length must equal states");
  if (static_cast<int>(tr.size()) != g.states)
    fail(join(path, "transition"), "length must equal states");
  g.payoff.resize(g.states);
  g.transition.resize(g.states);
  for (int s = 0; s < g.states; ++s) {
    const std::string ps = join(path, "payoff") + "[" + std::to_string(s) + "]";
    const std::string ts =
        join(path, "transition") + "[" + std::to_string(s) + "]";
    const Json& prow = expect_array(pay[s], ps);
    const Json& trow = expect_array(tr[s], ts);
    if (static_cast<int>(prow.size()) != g.actions_a[s])
      fail(ps, "length must equal actions_a[s]");
    if (static_cast<int>(trow.size()) != g.actions_a[s])
      fail(ts, "length must equal actions_a[s]");
    g.payoff[s].resize(g.actions_a[s]);
    g.transition[s].resize(g.actions_a[s]);
    for (int a = 0; a < g.actions_a[s]; ++a) {
      const std::string pa = ps + "[" + std::to_string(a) + "]";
      const std::string ta = ts + "[" + std::to_string(a) + "]";
      const Eigen::VectorXd prow_a = vec_from(prow[a], pa);
      if (static_cast<int>(prow_a.size()) != g.actions_b[s])
        fail(pa, "length must equal actions_b[s]");
      g.payoff[s][a].assign(prow_a.data(), prow_a.data() + prow_a.size());
      const Json& tb = expect_array(trow[a], ta);
      if (static_cast<int>(tb.size()) != g.actions_b[s])
        fail(ta, "length must equal actions_b[s]");
      g.transition[s][a].resize(g.actions_b[s]);
      for (int b = 0; b < g.actions_b[s]; ++b) {
        const std::string tp = ta + "[" + std::to_string(b) + "]";
        Eigen::VectorXd dist = vec_from(tb[b], tp);
        if (static_cast<int>(dist.size()) != g.states)
          fail(tp, "distribution length must equal states");
        g.transition[s][a][b] = std::move(dist);
      }
    }
  }
  try {
    g.validate();
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  return g;
}

Json emit_game(const GameSpec& g) {
  Json out = Json::object();
  out["states"] = g.states;
  out["actions_a"] = g.actions_a;
  out["actions_b"] = g.actions_b;
  Json pay = Json::array();
  Json tr = Json::array();
  for (int s = 0; s < g.states; ++s) {
    Json prow = Json::array();
    Json trow = Json::array();
    for (int a = 0; a < g.actions_a[s]; ++a) {
      Json pa = Json::array();
      Json ta = Json::array();
      for (int b = 0; b < g.actions_b[s]; ++b) {
        pa.push_back(json_num(g.payoff[s][a][b]));
        ta.push_back(vec_json(g.transition[s][a][b]));
      }
      prow.push_back(std::move(pa));
      trow.push_back(std::move(ta));
    }
    pay.push_back(std::move(prow));
    tr.push_back(std::move(trow));
  }
  out["payoff"] = std::move(pay);
  out["transition"] = std::move(tr);
  return out;
}

// ---- operator serialization -----------------------------------------------

Operator parse_operator(const Json& j, const std::string& path) {
  expect_object(j, path);
  const std::string kind =
      get_string(require(j, "kind", path), join(path, "kind"));
  try {
    if (kind == "nonneg-matrix") {
      reject_unknown(j, path, {"kind", "M"});
      return Operator::nonneg_matrix(
          mat_from(require(j, "M", path), join(path, "M")));
    }
    if (kind == "max-plus") {
      reject_unknown(j, path, {"kind", "A"});
      return Operator::max_plus(
          mat_from(require(j, "A", path), join(path, "A")));
    }
    if (kind == "shapley") {
      reject_unknown(j, path, {"kind", "game"});
      return Operator::shapley(
          parse_game(require(j, "game", path), join(path, "game")));
    }
    if (kind == "riccati") {
      reject_unknown(j, path, {"kind", "A", "B", "M"});
      return Operator::riccati(mat_from(require(j, "A", path), join(path, "A")),
                               mat_from(require(j, "B", path), join(path, "B")),
                               mat_from(require(j, "M", path), join(path, "M")));
    }
    if (kind == "translation") {
      reject_unknown(j, path, {"kind", "c", "norm_kind"});
      MetricKind norm = MetricKind::Top;
      if (const Json* nk = find(j, "norm_kind"))
        norm = metric_kind_from(get_string(*nk, join(path, "norm_kind")),
                                join(path, "norm_kind"));
      return Operator::translation(
          vec_from(require(j, "c", path), join(path, "c")), norm);
    }
    if (kind == "torus-shift") {
      reject_unknown(j, path, {"kind", "alpha", "t_step"});
      return Operator::torus_shift(
          num_from(require(j, "alpha", path), join(path, "alpha")),
          num_from(require(j, "t_step", path), join(path, "t_step")));
    }
    if (kind == "composite") {
      reject_unknown(j, path, {"kind", "parts"});
      const Json& parts =
          expect_array(require(j, "parts", path), join(path, "parts"));
      if (parts.empty()) fail(join(path, "parts"), "composite needs parts");
      std::vector<Operator> ops;
      for (std::size_t i = 0; i < parts.size(); ++i)
        ops.push_back(parse_operator(
            parts[i], join(path, "parts") + "[" + std::to_string(i) + "]"));
      return Operator::composite(std::move(ops));
    }
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0 && !path.empty()) throw;  // carries a path
    fail(path, what);
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
  fail(join(path, "kind"), "unknown operator kind '" + kind + "'");
}

Json emit_operator(const Operator& op) {
  Json out = Json::object();
  out["kind"] = to_string(op.kind());
  switch (op.kind()) {
    case OperatorKind::NonnegMatrix:
      out["M"] = mat_json(op.matrix());
      break;
    case OperatorKind::MaxPlus:
      out["A"] = mat_json(op.matrix());
      break;
    case OperatorKind::Shapley:
      out["game"] = emit_game(op.game());
      break;
    case OperatorKind::Riccati:
      out["A"] = mat_json(op.riccati_a());
      out["B"] = mat_json(op.riccati_b());
      out["M"] = mat_json(op.riccati_m());
      break;
    case OperatorKind::Translation:
      out["c"] = vec_json(op.shift());
      out["norm_kind"] = to_string(op.natural_metric());
      break;
    case OperatorKind::TorusShift:
      out["alpha"] = json_num(op.torus_alpha());
      out["t_step"] = json_num(op.torus_drift());
      break;
    case OperatorKind::Composite: {
      Json parts = Json::array();
      for (const Operator& part : op.parts()) parts.push_back(emit_operator(part));
      out["parts"] = std::move(parts);
      break;
    }
  }
  return out;
}

Json emit_metric(const HemiMetric& metric) {
  Json out = Json::object();
  if (metric.custom()) {
    out["kind"] = "custom-norm";
    const std::vector<Eigen::VectorXd> forms = metric.custom()->extreme_forms();
    Eigen::MatrixXd m(forms.size(), metric.dimension());
    for (std::size_t i = 0; i < forms.size(); ++i)
      m.row(static_cast<Eigen::Index>(i)) = forms[i].transpose();
    out["forms"] = mat_json(m);
    return out;
  }
  out["kind"] = to_string(metric.kind());
  if (metric.nu()) out["nu"] = to_string(*metric.nu());
  return out;
}

Json emit_point(SpaceKind space, int dimension, const Eigen::VectorXd& packed) {
  (void)dimension;
  if (space == SpaceKind::PsdConeInterior) return mat_json(unpack_square(packed));
  return vec_json(packed);
}

Eigen::VectorXd parse_point(SpaceKind space, int dimension, const Json& value,
                            const std::string& path) {
  if (space == SpaceKind::PsdConeInterior) {
    const Eigen::MatrixXd m = mat_from(value, path);
    if (m.rows() != dimension || m.cols() != dimension)
      fail(path, "expected a " + std::to_string(dimension) + "x" +
                     std::to_string(dimension) + " matrix");
    if (!m.isApprox(m.transpose(), 1e-12)) fail(path, "matrix is not symmetric");
    return pack_square(0.5 * (m + m.transpose()));
  }
  const Eigen::VectorXd v = vec_from(value, path);
  const int expect = space == SpaceKind::TorusTimesLine ? 2 : dimension;
  if (v.size() != expect)
    fail(path, "expected a vector of length " + std::to_string(expect));
  return v;
}

Json json_num(double v) {
  if (std::isfinite(v)) return Json(v);
  if (v > 0) return Json("inf");
  if (v < 0) return Json("-inf");
  return Json("nan");
}

double num_from(const Json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  fail(path, "expected a number (or \"inf\"/\"-inf\")");
}

namespace {

Eigen::VectorXd default_start(const Operator& op) {
  switch (op.space()) {
    case SpaceKind::StandardConeInterior:
      return Eigen::VectorXd::Ones(op.dimension());
    case SpaceKind::PsdConeInterior:
      return pack_square(
          Eigen::MatrixXd::Identity(op.dimension(), op.dimension()));
    case SpaceKind::TorusTimesLine:
      return Eigen::VectorXd::Zero(2);
    case SpaceKind::RealVectorSpace:
      return Eigen::VectorXd::Zero(op.dimension());
  }
  return Eigen::VectorXd::Zero(op.dimension());
}

HemiMetric parse_metric_for(const Operator& op, const Json& j,
                            const std::string& path) {
  expect_object(j, path);
  const std::string kind =
      get_string(require(j, "kind", path), join(path, "kind"));
  try {
    if (kind == "custom-norm") {
      reject_unknown(j, path, {"kind", "forms"});
      if (op.space() != SpaceKind::RealVectorSpace)
        fail(path, "custom-norm metrics need a vector-space operator");
      const Eigen::MatrixXd forms =
          mat_from(require(j, "forms", path), join(path, "forms"));
      if (forms.cols() != op.point_size())
        fail(join(path, "forms"), "form arity must match the operator dimension");
      return HemiMetric::custom_norm(HemiNorm::custom(forms));
    }
    reject_unknown(j, path, {"kind", "nu"});
    const MetricKind mk = metric_kind_from(kind, join(path, "kind"));
    std::optional<NuKind> nu;
    if (const Json* nj = find(j, "nu"))
      nu = nu_from(get_string(*nj, join(path, "nu")), join(path, "nu"));
    return HemiMetric(op.space(), mk, op.dimension(), nu);
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;  // already carries a field path
    fail(path, what);
  }
}

ProblemFile parse_problem_fields(const Json& doc) {
  expect_object(doc, "problem");
  ProblemFile p;
  p.op = parse_operator(require(doc, "operator", ""), "operator");

  if (const Json* mj = find(doc, "metric"))
    p.metric = parse_metric_for(p.op, *mj, "metric");
  else
    p.metric =
        HemiMetric(p.op.space(), p.op.natural_metric(), p.op.dimension());

  if (const Json* sj = find(doc, "start")) {
    p.start = parse_point(p.op.space(), p.op.dimension(), *sj, "start");
    if (!p.metric.in_domain(p.start)) fail("start", "point outside the domain");
  } else {
    p.start = default_start(p.op);
  }

  if (const Json* ds = find(doc, "dual_seeds")) {
    const Json& arr = expect_array(*ds, "dual_seeds");
    for (std::size_t i = 0; i < arr.size(); ++i)
      p.dual_seeds.push_back(
          parse_point(p.op.space(), p.op.dimension(), arr[i],
                      "dual_seeds[" + std::to_string(i) + "]"));
  }

  if (const Json* hj = find(doc, "horizon"))
    p.horizon = get_int(*hj, "horizon", 1, 10000000);
  if (const Json* sj = find(doc, "seed")) p.seed = get_u64(*sj, "seed");

  if (const Json* tj = find(doc, "tolerances")) {
    expect_object(*tj, "tolerances");
    reject_unknown(*tj, "tolerances", {"verify", "interval"});
    if (const Json* v = find(*tj, "verify")) {
      p.verify_tol = num_from(*v, "tolerances.verify");
      if (!(p.verify_tol > 0) || !std::isfinite(p.verify_tol))
        fail("tolerances.verify", "must be a positive number");
    }
    if (const Json* v = find(*tj, "interval")) {
      p.interval_tol = num_from(*v, "tolerances.interval");
      if (!(p.interval_tol > 0) || !std::isfinite(p.interval_tol))
        fail("tolerances.interval", "must be a positive number");
    }
  }
  if (const Json* sj = find(doc, "schedules")) {
    expect_object(*sj, "schedules");
    reject_unknown(*sj, "schedules", {"y_alpha_levels", "pumping_steps"});
    if (const Json* v = find(*sj, "y_alpha_levels"))
      p.y_alpha_levels = get_int(*v, "schedules.y_alpha_levels", 1, 60);
    if (const Json* v = find(*sj, "pumping_steps"))
      p.pumping_steps = get_int(*v, "schedules.pumping_steps", 1, 10000);
  }
  return p;
}

Json problem_echo(const ProblemFile& p) {
  Json echo = Json::object();
  echo["operator"] = emit_operator(p.op);
  echo["metric"] = emit_metric(p.metric);
  echo["start"] = emit_point(p.op.space(), p.op.dimension(), p.start);
  Json seeds = Json::array();
  for (const Eigen::VectorXd& s : p.dual_seeds)
    seeds.push_back(emit_point(p.op.space(), p.op.dimension(), s));
  echo["dual_seeds"] = std::move(seeds);
  echo["horizon"] = p.horizon;
  echo["seed"] = p.seed;
  echo["tolerances"] = Json::object();
  echo["tolerances"]["verify"] = json_num(p.verify_tol);
  echo["tolerances"]["interval"] = json_num(p.interval_tol);
  echo["schedules"] = Json::object();
  echo["schedules"]["y_alpha_levels"] = p.y_alpha_levels;
  echo["schedules"]["pumping_steps"] = p.pumping_steps;
  return echo;
}

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  std::tm g{};
  gmtime_r(&t, &g);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &g);
  return buf;
}

Json report_header(const char* command) {
  Json rep = Json::object();
  Json tool = Json::object();
  tool["name"] = kToolName;
  tool["version"] = kToolVersion;
  rep["tool"] = std::move(tool);
  rep["timestamp"] = iso_now();
  rep["command"] = command;
  return rep;
}

// ---- certificate transcripts ----------------------------------------------

Json emit_primal(const PrimalCertificate& c, SpaceKind space, int dim) {
  Json out = Json::object();
  out["y"] = emit_point(space, dim, c.y);
  out["mu"] = json_num(c.mu);
  out["rate_bound"] = json_num(c.rate_bound);
  out["homogeneous_rule"] = c.homogeneous_rule;
  out["observed"] = json_num(c.observed);
  out["slack"] = json_num(c.slack);
  out["status"] = status_name(c.status);
  out["reason"] = c.reason;
  return out;
}

Json emit_dual(const DualCertificate& c, SpaceKind space, int dim) {
  Json out = Json::object();
  out["u"] = emit_point(space, dim, c.u);
  out["mu"] = json_num(c.mu);
  out["rate_bound"] = json_num(c.rate_bound);
  if (c.recession_at_u.size() > 0)
    out["recession_at_u"] = emit_point(space, dim, c.recession_at_u);
  out["observed"] = json_num(c.observed);
  out["slack"] = json_num(c.slack);
  out["trivial"] = c.trivial;
  Json pump = Json::object();
  pump["steps"] = c.pumping.steps;
  pump["worst_slack"] = json_num(c.pumping.worst_slack);
  pump["passed"] = c.pumping.passed;
  out["pumping"] = std::move(pump);
  out["status"] = status_name(c.status);
  out["reason"] = c.reason;
  return out;
}

Json emit_ray(const ExtremeRayCertificate& c) {
  Json out = Json::object();
  Json ray = Json::object();
  ray["cone"] = c.ray.cone == ConeKind::Standard ? "standard" : "psd";
  if (c.ray.cone == ConeKind::Standard) ray["index"] = c.ray.index;
  ray["direction"] = vec_json(c.ray.direction);
  out["ray"] = std::move(ray);
  out["rate"] = json_num(c.rate);
  out["offset"] = json_num(c.offset);
  out["tail_rate"] = json_num(c.tail_rate);
  out["horizon"] = c.horizon;
  out["status"] = status_name(c.status);
  out["reason"] = c.reason;
  return out;
}

Json emit_eval_form(const EvalFormCertificate& c, SpaceKind space, int dim) {
  Json out = Json::object();
  switch (c.kind) {
    case EvalFormKind::Coordinate: out["kind"] = "coordinate"; break;
    case EvalFormKind::DualBall: out["kind"] = "dual-ball"; break;
    case EvalFormKind::ExtremeRay: out["kind"] = "extreme-ray"; break;
  }
  out["form"] = vec_json(c.form);
  out["form_index"] = c.form_index;
  out["rate"] = json_num(c.rate);
  out["horizon"] = c.horizon;
  out["worst_slack"] = json_num(c.worst_slack);
  out["anchor"] = emit_point(space, dim, c.anchor);
  out["status"] = status_name(c.status);
  out["reason"] = c.reason;
  return out;
}

Json emit_witnesses(const std::vector<CoordinateWitness>& ws) {
  Json out = Json::array();
  for (const CoordinateWitness& w : ws) {
    Json j = Json::object();
    j["omega"] = w.omega;
    j["violation"] = json_num(w.violation);
    j["passed"] = w.passed;
    out.push_back(std::move(j));
  }
  return out;
}

bool gauge_metric(MetricKind k) {
  return k == MetricKind::Rfunk || k == MetricKind::RfunkPlus ||
         k == MetricKind::Thompson || k == MetricKind::Hilbert ||
         k == MetricKind::DeltaNu;
}

struct BoundTracker {
  Json sources = Json::object();
  double value;
  std::string source = "none";
  bool is_upper;

  explicit BoundTracker(bool upper)
      : value(upper ? kInf : -kInf), is_upper(upper) {}

  // pad absorbs the bound's own rounding error (renormalized orbit products
  // accumulate ~k eps relative error), keeping the certified side sound.
  void add(const char* name, double v, double pad = 0.0) {
    if (std::isnan(v) || std::abs(v) == kInf) return;
    const double padded = is_upper ? v + pad : v - pad;
    sources[name] = json_num(padded);
    const bool better = is_upper ? padded < value : padded > value;
    if (better) {
      value = padded;
      source = name;
    }
  }
};

double orbit_pad(double v, long steps) {
  return (1e-12 + 1e-15 * double(steps)) * std::max(1.0, std::abs(v));
}

double certificate_pad(double v) { return 1e-12 * std::max(1.0, std::abs(v)); }

}  // namespace

ProblemFile parse_problem(const Json& doc) {
  expect_object(doc, "problem");
  reject_unknown(doc, "",
                 {"operator", "metric", "start", "dual_seeds", "horizon",
                  "seed", "tolerances", "schedules"});
  ProblemFile p = parse_problem_fields(doc);
  p.echo = problem_echo(p);
  return p;
}

CommandResult run_rate(const Json& problem_doc) {
  const ProblemFile p = parse_problem(problem_doc);
  const SpaceKind space = p.op.space();
  const int dim = p.op.dimension();

  Json rep = report_header("rate");
  rep["seed"] = p.seed;
  rep["problem"] = p.echo;
  Json notices = Json::array();

  RateEstimate est = estimate_rate(p.op, p.metric, p.start, p.horizon);

  // The maximin characterisation needs a metrically star-shaped space; the
  // torus shift is the standing counterexample.
  const bool star = space != SpaceKind::TorusTimesLine;
  if (!star) notices.push_back("not star-shaped: maximin not applicable");

  bool any_falsified = false;
  Json certs = Json::object();

  if (p.op.cone_operator()) {
    std::vector<Eigen::VectorXd> candidates = est.probes;
    candidates.insert(candidates.end(), p.dual_seeds.begin(),
                      p.dual_seeds.end());
    if (primal_bound_applies(p.op, p.metric)) {
      if (const auto primal = search_primal(p.op, p.metric, candidates)) {
        certs["primal"] = emit_primal(*primal, space, dim);
        any_falsified |= primal->status == VerifyStatus::Falsified;
      }
    }
    if (dual_bound_applies(p.metric)) {
      DualCertificate dual = search_dual(p.op, p.metric, candidates);
      if (!dual.trivial && p.pumping_steps != 20)
        dual = verify_dual(p.op, dual.u, dual.mu, p.pumping_steps, p.verify_tol);
      certs["dual"] = emit_dual(dual, space, dim);
      any_falsified |= dual.status == VerifyStatus::Falsified;
      if (!dual.trivial && dual.status == VerifyStatus::Verified) {
        est.lower_from_certificate = dual.rate_bound;
        const ExtremeRayCertificate ray =
            extreme_ray_certificate(p.op, p.start, dual);
        certs["extreme_ray"] = emit_ray(ray);
        any_falsified |= ray.status == VerifyStatus::Falsified;
      }
    }
  }

  if (space == SpaceKind::RealVectorSpace) {
    const int kn_horizon = std::min(p.horizon, 1000);
    if (const auto kn =
            kohlberg_neyman_form(p.op, p.metric, p.start, kn_horizon)) {
      certs["eval_form"] = emit_eval_form(*kn, space, dim);
      any_falsified |= kn->status == VerifyStatus::Falsified;
    }
  }

  BoundTracker lower(false);
  BoundTracker upper(true);

  if (p.op.kind() == OperatorKind::Shapley &&
      p.metric.kind() == MetricKind::Top && !p.metric.custom()) {
    const GameRateResult g = game_rate(p.op.game(), p.horizon);
    Json gj = Json::object();
    gj["horizon"] = g.horizon;
    gj["rho_plus"] = json_num(g.rho_plus);
    gj["rho_minus"] = json_num(g.rho_minus);
    gj["fekete_upper"] = json_num(g.fekete_upper);
    gj["displacement_upper"] = json_num(g.displacement_upper);
    gj["lower_bound"] = json_num(g.lower_bound);
    gj["omega_plus"] = emit_witnesses(g.omega_plus);
    gj["omega_minus"] = emit_witnesses(g.omega_minus);
    if (!g.critical_cycle_plus.empty())
      gj["critical_cycle_plus"] = g.critical_cycle_plus;
    rep["game"] = std::move(gj);
    upper.add("game_fekete", g.fekete_upper, orbit_pad(g.fekete_upper, g.horizon));
    upper.add("game_displacement", g.displacement_upper,
              orbit_pad(g.displacement_upper, 1));
    lower.add("game_order", g.lower_bound, orbit_pad(g.lower_bound, g.horizon));
  }

  Json ej = Json::object();
  ej["horizon"] = est.horizon;
  ej["orbit_steps"] = est.orbit_steps;
  ej["orbit_truncated"] = est.orbit_truncated;
  ej["upper_from_orbit"] = json_num(est.upper_from_orbit);
  ej["upper_from_point"] = json_num(est.upper_from_point);
  ej["lower_from_order"] = json_num(est.lower_from_order);
  ej["lower_from_certificate"] = json_num(est.lower_from_certificate);
  ej["exact"] = est.exact ? json_num(*est.exact) : Json(nullptr);
  if (est.best_point.size() > 0)
    ej["best_point"] = emit_point(space, dim, est.best_point);
  rep["estimate"] = std::move(ej);
  if (!certs.empty()) rep["certificates"] = std::move(certs);

  // Certified interval. Fekete and the displacement infimum are sound upper
  // bounds on rho unconditionally; the order bound, verified dual bound, and
  // closed forms are sound lower bounds; closed forms pin both sides.
  upper.add("fekete", est.upper_from_orbit,
            orbit_pad(est.upper_from_orbit, est.orbit_steps));
  upper.add("displacement", est.upper_from_point,
            orbit_pad(est.upper_from_point, 1));
  if (est.exact) upper.add("exact", *est.exact);
  if (est.exact) lower.add("exact", *est.exact);
  lower.add("order", est.lower_from_order,
            orbit_pad(est.lower_from_order, est.orbit_steps));
  // A homogeneous operator that extends to the closed cone has an exact
  // recession map; otherwise mu came through truncated limit schedules and
  // pumping accepts up to verify_tol per step, so pad accordingly.
  const bool exact_recession =
      p.op.positively_homogeneous() && p.op.extends_continuously();
  const double dual_rate = est.lower_from_certificate;
  const double dual_pad =
      exact_recession
          ? certificate_pad(dual_rate)
          : (2.0 * p.verify_tol + 1e-12) * std::max(1.0, std::abs(dual_rate));
  lower.add("dual", dual_rate, dual_pad);
  if (p.metric.nonnegative()) lower.add("metric_nonnegative", 0.0);
  if (rep.contains("certificates") && rep["certificates"].contains("primal") &&
      rep["certificates"]["primal"]["status"] == "verified") {
    const double bound = num_from(rep["certificates"]["primal"]["rate_bound"],
                                  "certificates.primal.rate_bound");
    upper.add("primal", bound, certificate_pad(bound));
  }

  const bool nonempty = lower.value <= upper.value + p.interval_tol;
  Json ij = Json::object();
  ij["units"] = gauge_metric(p.metric.kind()) ? "log-gauge" : "additive";
  ij["lower"] = json_num(lower.value);
  ij["upper"] = json_num(upper.value);
  ij["width"] = json_num(upper.value - lower.value);
  ij["lower_source"] = lower.source;
  ij["upper_source"] = upper.source;
  ij["lower_sources"] = std::move(lower.sources);
  ij["upper_sources"] = std::move(upper.sources);
  ij["nonempty"] = nonempty;
  rep["interval"] = std::move(ij);

  if (!star) {
    // Example 3.9 territory: report the displacement infimum estimate
    // (rho-bar) next to the orbit rate and show the gap.
    Json mm = Json::object();
    mm["applicable"] = false;
    mm["rho_bar_upper"] = json_num(est.upper_from_point);
    mm["gap_vs_rate_upper"] = json_num(est.upper_from_point - upper.value);
    rep["maximin"] = std::move(mm);
  }
  if (!nonempty)
    notices.push_back("certified interval is empty: lower exceeds upper");
  rep["notices"] = std::move(notices);

  CommandResult result;
  result.exit_code = any_falsified ? 2 : (nonempty ? 0 : 3);
  rep["status"] = result.exit_code == 0
                      ? "verified"
                      : (result.exit_code == 2 ? "falsified" : "inconclusive");
  result.doc = std::move(rep);
  return result;
}

CommandResult run_certify(const Json& doc) {
  expect_object(doc, "problem");
  reject_unknown(doc, "",
                 {"operator", "metric", "start", "dual_seeds", "horizon",
                  "seed", "tolerances", "schedules", "certificates"});
  Json problem_part = doc;
  problem_part.erase("certificates");
  ProblemFile p = parse_problem_fields(problem_part);
  p.echo = problem_echo(p);
  const SpaceKind space = p.op.space();
  const int dim = p.op.dimension();

  const Json& list = expect_array(require(doc, "certificates", ""), "certificates");
  if (list.empty()) fail("certificates", "expected at least one certificate");

  Json rep = report_header("certify");
  rep["seed"] = p.seed;
  rep["problem"] = p.echo;

  int verified = 0, falsified = 0, inconclusive = 0;
  const auto tally = [&](VerifyStatus s) {
    if (s == VerifyStatus::Verified) ++verified;
    else if (s == VerifyStatus::Falsified) ++falsified;
    else ++inconclusive;
  };

  Json out = Json::array();
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string path = "certificates[" + std::to_string(i) + "]";
    const Json& cj = expect_object(list[i], path);
    const std::string type =
        get_string(require(cj, "type", path), join(path, "type"));
    Json entry = Json::object();
    entry["type"] = type;
    if (type == "primal") {
      reject_unknown(cj, path, {"type", "y", "mu"});
      const Eigen::VectorXd y = parse_point(
          space, dim, require(cj, "y", path), join(path, "y"));
      const double mu = num_from(require(cj, "mu", path), join(path, "mu"));
      const PrimalCertificate c = verify_primal(p.op, y, mu, p.verify_tol);
      entry["result"] = emit_primal(c, space, dim);
      tally(c.status);
    } else if (type == "dual") {
      reject_unknown(cj, path, {"type", "u", "mu"});
      const Eigen::VectorXd u = parse_point(
          space, dim, require(cj, "u", path), join(path, "u"));
      const double mu = num_from(require(cj, "mu", path), join(path, "mu"));
      const DualCertificate c =
          verify_dual(p.op, u, mu, p.pumping_steps, p.verify_tol);
      entry["result"] = emit_dual(c, space, dim);
      tally(c.status);
    } else if (type == "eval-form") {
      reject_unknown(cj, path, {"type", "anchor", "rate", "horizon"});
      const Eigen::VectorXd anchor = parse_point(
          space, dim, require(cj, "anchor", path), join(path, "anchor"));
      const double rate =
          num_from(require(cj, "rate", path), join(path, "rate"));
      int horizon = std::min(p.horizon, 1000);
      if (const Json* hj = find(cj, "horizon"))
        horizon = get_int(*hj, join(path, "horizon"), 1, 1000000);
      const EvalFormCertificate c =
          kohlberg_neyman_form(p.op, p.metric, anchor, rate, horizon);
      entry["result"] = emit_eval_form(c, space, dim);
      tally(c.status);
    } else {
      fail(join(path, "type"), "unknown certificate type '" + type + "'");
    }
    out.push_back(std::move(entry));
  }
  rep["certificates"] = std::move(out);
  Json summary = Json::object();
  summary["verified"] = verified;
  summary["falsified"] = falsified;
  summary["inconclusive"] = inconclusive;
  rep["summary"] = std::move(summary);

  CommandResult result;
  result.exit_code = falsified > 0 ? 2 : (inconclusive > 0 ? 3 : 0);
  rep["status"] = result.exit_code == 0
                      ? "verified"
                      : (result.exit_code == 2 ? "falsified" : "inconclusive");
  result.doc = std::move(rep);
  return result;
}

CommandResult run_check_space(const Json& doc) {
  expect_object(doc, "problem");
  reject_unknown(doc, "",
                 {"space", "dimension", "metric", "geodesic", "center",
                  "samples", "seed", "tol", "checks"});
  const SpaceKind space = space_from(
      get_string(require(doc, "space", ""), "space"), "space");
  const int dim = get_int(require(doc, "dimension", ""), "dimension", 1, 64);

  const Json& mj = expect_object(require(doc, "metric", ""), "metric");
  reject_unknown(mj, "metric", {"kind", "nu"});
  const MetricKind mk = metric_kind_from(
      get_string(require(mj, "kind", "metric"), "metric.kind"), "metric.kind");
  std::optional<NuKind> nu;
  if (const Json* nj = find(mj, "nu"))
    nu = nu_from(get_string(*nj, "metric.nu"), "metric.nu");
  HemiMetric metric = [&] {
    try {
      return HemiMetric(space, mk, dim, nu);
    } catch (const std::exception& e) {
      fail("metric", e.what());
    }
  }();

  SamplePlan plan;
  if (const Json* v = find(doc, "samples"))
    plan.count = get_int(*v, "samples", 1, 100000000);
  if (const Json* v = find(doc, "seed")) plan.seed = get_u64(*v, "seed");
  if (const Json* v = find(doc, "tol")) {
    plan.tol = num_from(*v, "tol");
    if (!(plan.tol > 0) || !std::isfinite(plan.tol))
      fail("tol", "must be a positive number");
  }

  const bool cone = space == SpaceKind::StandardConeInterior ||
                    space == SpaceKind::PsdConeInterior;
  std::optional<GeodesicKind> geo;
  if (const Json* gj = find(doc, "geodesic")) {
    geo = geodesic_from(get_string(*gj, "geodesic"), "geodesic");
  } else {
    geo = cone ? GeodesicKind::GeometricMean : GeodesicKind::StraightLine;
  }

  Json notices = Json::array();
  std::vector<std::string> checks;
  if (const Json* cj = find(doc, "checks")) {
    const Json& arr = expect_array(*cj, "checks");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string name =
          get_string(arr[i], "checks[" + std::to_string(i) + "]");
      if (name != "triangle" && name != "separation" && name != "geodesic" &&
          name != "star-shaped")
        fail("checks[" + std::to_string(i) + "]",
             "unknown check '" + name + "'");
      checks.push_back(name);
    }
  } else {
    checks = {"triangle", "separation", "geodesic", "star-shaped"};
    if (!metric.weakly_separating()) {
      checks.erase(std::find(checks.begin(), checks.end(), "separation"));
      notices.push_back("separation skipped: metric is not weakly separating");
    }
    if (!geo) {
      checks.erase(std::find(checks.begin(), checks.end(), "geodesic"));
      checks.erase(std::find(checks.begin(), checks.end(), "star-shaped"));
      notices.push_back("geodesic checks skipped: no geodesic family here");
    }
  }

  std::optional<GeodesicFamily> family;
  Eigen::VectorXd center;
  if (geo) {
    if (const Json* cj = find(doc, "center")) {
      center = parse_point(space, dim, *cj, "center");
    } else {
      switch (space) {
        case SpaceKind::StandardConeInterior:
          center = Eigen::VectorXd::Ones(dim);
          break;
        case SpaceKind::PsdConeInterior:
          center = pack_square(Eigen::MatrixXd::Identity(dim, dim));
          break;
        case SpaceKind::TorusTimesLine:
          center = Eigen::VectorXd::Zero(2);
          break;
        case SpaceKind::RealVectorSpace:
          center = Eigen::VectorXd::Zero(dim);
          break;
      }
    }
    try {
      family.emplace(*geo, metric, center);
    } catch (const std::exception& e) {
      fail("geodesic", e.what());
    }
  }

  Json rep = report_header("check-space");
  rep["seed"] = plan.seed;
  Json problem = Json::object();
  problem["space"] = to_string(space);
  problem["dimension"] = dim;
  problem["metric"] = emit_metric(metric);
  if (geo) problem["geodesic"] = to_string(*geo);
  if (family) problem["center"] = emit_point(space, dim, center);
  problem["samples"] = plan.count;
  problem["seed"] = plan.seed;
  problem["tol"] = json_num(plan.tol);
  rep["problem"] = std::move(problem);

  bool any_violation = false;
  Json out = Json::array();
  for (const std::string& name : checks) {
    ViolationReport r;
    if (name == "triangle") {
      r = check_triangle(metric, plan);
    } else if (name == "separation") {
      r = check_separation(metric, plan);
    } else {
      if (!family)
        fail("checks", "'" + name + "' needs a geodesic family");
      r = name == "geodesic" ? check_geodesic_identity(*family, plan)
                             : check_star_shaped(*family, plan);
    }
    Json cj = Json::object();
    cj["name"] = name;
    cj["count_checked"] = r.count_checked;
    cj["violations"] = r.samples.size();
    cj["max_excess"] = json_num(r.max_excess);
    Json samples = Json::array();
    for (std::size_t i = 0; i < r.samples.size() && i < 10; ++i) {
      Json s = Json::object();
      s["what"] = r.samples[i].what;
      s["excess"] = json_num(r.samples[i].excess);
      samples.push_back(std::move(s));
    }
    cj["samples"] = std::move(samples);
    cj["passed"] = r.clean();
    any_violation |= !r.clean();
    out.push_back(std::move(cj));
  }
  rep["checks"] = std::move(out);
  rep["notices"] = std::move(notices);

  CommandResult result;
  result.exit_code = any_violation ? 2 : 0;
  rep["status"] = any_violation ? "falsified" : "verified";
  result.doc = std::move(rep);
  return result;
}

CommandResult run_game(const Json& doc) {
  expect_object(doc, "problem");
  reject_unknown(doc, "", {"game", "horizon", "seed"});
  const GameSpec game = parse_game(require(doc, "game", ""), "game");
  int horizon = 1000;
  if (const Json* hj = find(doc, "horizon"))
    horizon = get_int(*hj, "horizon", 1, 1000000);
  std::uint64_t seed = 12345;
  if (const Json* sj = find(doc, "seed")) seed = get_u64(*sj, "seed");

  const GameRateResult g = game_rate(game, horizon);

  Json rep = report_header("game");
  rep["seed"] = seed;
  Json problem = Json::object();
  problem["game"] = emit_game(game);
  problem["horizon"] = horizon;
  problem["seed"] = seed;
  rep["problem"] = std::move(problem);

  rep["one_player"] = game.one_player();
  rep["deterministic"] = game.deterministic();
  rep["rho_plus"] = json_num(g.rho_plus);
  rep["rho_minus"] = json_num(g.rho_minus);
  rep["fekete_upper"] = json_num(g.fekete_upper);
  rep["displacement_upper"] = json_num(g.displacement_upper);
  rep["lower_bound"] = json_num(g.lower_bound);
  rep["omega_plus"] = emit_witnesses(g.omega_plus);
  rep["omega_minus"] = emit_witnesses(g.omega_minus);
  if (!g.critical_cycle_plus.empty())
    rep["critical_cycle_plus"] = g.critical_cycle_plus;

  // A thin strided sample of the value iteration keeps reports small.
  Json iter = Json::array();
  const int total = static_cast<int>(g.iterates.size());
  const int stride = std::max(1, (total - 1 + 16) / 17);
  for (int k = 0; k < total; k += stride) iter.push_back(vec_json(g.iterates[k]));
  if (total > 0 && (total - 1) % stride != 0)
    iter.push_back(vec_json(g.iterates[total - 1]));
  rep["iterate_count"] = total;
  rep["iterates_sample"] = std::move(iter);

  const bool order_ok = g.rho_minus <= g.rho_plus + 1e-9;
  const bool plus_ok = std::any_of(g.omega_plus.begin(), g.omega_plus.end(),
                                   [](const CoordinateWitness& w) { return w.passed; });
  const bool minus_ok = std::any_of(g.omega_minus.begin(), g.omega_minus.end(),
                                    [](const CoordinateWitness& w) { return w.passed; });
  Json checks = Json::object();
  checks["rho_order_ok"] = order_ok;
  checks["omega_plus_witness"] = plus_ok;
  checks["omega_minus_witness"] = minus_ok;
  rep["checks"] = std::move(checks);

  CommandResult result;
  result.exit_code = (order_ok && plus_ok && minus_ok) ? 0 : 3;
  rep["status"] = result.exit_code == 0 ? "verified" : "inconclusive";
  result.doc = std::move(rep);
  return result;
}

CommandResult run_horoballs(const Json& doc) {
  expect_object(doc, "problem");
  reject_unknown(doc, "",
                 {"operator", "u", "levels", "samples", "seed", "tol", "csv"});
  const Operator op = parse_operator(require(doc, "operator", ""), "operator");
  if (op.kind() != OperatorKind::Riccati || op.dimension() != 2)
    fail("operator", "horoballs need a 2x2 riccati operator");
  const int dim = 2;
  const HemiMetric metric(SpaceKind::PsdConeInterior, MetricKind::Rfunk, dim);
  const Eigen::VectorXd base_packed =
      pack_square(Eigen::MatrixXd::Identity(dim, dim));

  int samples = 128;
  if (const Json* v = find(doc, "samples")) samples = get_int(*v, "samples", 1, 1000000);
  std::uint64_t seed = 12345;
  if (const Json* v = find(doc, "seed")) seed = get_u64(*v, "seed");
  double tol = 1e-8;
  if (const Json* v = find(doc, "tol")) {
    tol = num_from(*v, "tol");
    if (!(tol > 0) || !std::isfinite(tol)) fail("tol", "must be a positive number");
  }
  bool want_csv = false;
  if (const Json* v = find(doc, "csv")) want_csv = get_bool(*v, "csv");

  Json rep = report_header("horoballs");
  rep["seed"] = seed;
  Json notices = Json::array();

  // The certified direction: user-supplied or found by the dual search.
  DualCertificate dual;
  if (const Json* uj = find(doc, "u")) {
    const Eigen::VectorXd u = parse_point(SpaceKind::PsdConeInterior, dim, *uj, "u");
    const ExtensionResult rec = op.recession(u);
    if (!rec.converged) fail("u", "recession map did not settle at this direction");
    const double mu = gauge_m(ConePoint::from_packed(ConeKind::Psd, u),
                              ConePoint::from_packed(ConeKind::Psd, rec.value));
    if (!(mu > 0) || !std::isfinite(mu))
      fail("u", "direction carries no positive recession eigenvalue");
    dual = verify_dual(op, u, mu);
  } else {
    const RateEstimate est = estimate_rate(op, metric, base_packed, 200);
    dual = search_dual(op, metric, est.probes);
  }

  Json problem = Json::object();
  problem["operator"] = emit_operator(op);
  if (dual.u.size() > 0)
    problem["u"] = emit_point(SpaceKind::PsdConeInterior, dim, dual.u);
  problem["samples"] = samples;
  problem["seed"] = seed;
  problem["tol"] = json_num(tol);
  problem["csv"] = want_csv;

  if (dual.trivial || dual.status != VerifyStatus::Verified || !(dual.mu > 0)) {
    problem["levels"] = Json::array();
    rep["problem"] = std::move(problem);
    rep["dual"] = emit_dual(dual, SpaceKind::PsdConeInterior, dim);
    notices.push_back("missing certificate: no verified dual direction");
    rep["notices"] = std::move(notices);
    rep["status"] = "inconclusive";
    CommandResult result;
    result.doc = std::move(rep);
    result.exit_code = 3;
    return result;
  }

  const double rho = dual.rate_bound;
  std::vector<double> levels = {0.0, rho, 2.0 * rho};
  if (const Json* lj = find(doc, "levels")) {
    const Eigen::VectorXd lv = vec_from(*lj, "levels");
    if (lv.size() == 0) fail("levels", "expected at least one level");
    levels.assign(lv.data(), lv.data() + lv.size());
    for (double l : levels)
      if (!std::isfinite(l)) fail("levels", "levels must be finite");
  }
  Json levels_echo = Json::array();
  for (double l : levels) levels_echo.push_back(json_num(l));
  problem["levels"] = std::move(levels_echo);
  rep["problem"] = std::move(problem);
  rep["dual"] = emit_dual(dual, SpaceKind::PsdConeInterior, dim);

  // Direction, basepoint, and Martin function h(X) = RFunk(I,U) - RFunk(X,U).
  const ConePoint base_pt = ConePoint::from_packed(ConeKind::Psd, base_packed);
  Eigen::MatrixXd U = unpack_square(dual.u);
  U /= U.norm();
  const ConePoint u_pt = ConePoint::psd(U);
  const ConeMartinFunction h(MartinVariant::Rfunk, u_pt, base_pt);
  const double c = std::log(gauge_M(base_pt, u_pt));
  rep["rho"] = json_num(rho);
  rep["rfunk_base_to_u"] = json_num(c);
  rep["horofunction"] = h.horofunction();

  // Dominant eigenvector of U, used to keep samples off the degenerate ray.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(U);
  const Eigen::VectorXd u_dir = es.eigenvectors().col(1);

  Rng rng(seed);
  double apex_worst = 0.0;
  double boundary_worst = 0.0;
  double nesting_worst = -kInf;
  double mapping_worst = -kInf;
  long mapping_checked = 0;
  std::string csv;
  if (want_csv) csv = "level,x11,x22,sqrt2_x12,h\n";

  const auto coords = [](const Eigen::MatrixXd& m) {
    return std::array<double, 3>{m(0, 0), m(1, 1), std::sqrt(2.0) * m(0, 1)};
  };
  const auto csv_row = [&](double level, const Eigen::MatrixXd& m, double hv) {
    if (!want_csv) return;
    char buf[160];
    const auto xyz = coords(m);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", level,
                  xyz[0], xyz[1], xyz[2], hv);
    csv += buf;
  };

  std::vector<double> sorted_levels = levels;
  std::sort(sorted_levels.begin(), sorted_levels.end());

  Json level_docs = Json::array();
  for (double level : levels) {
    const double s = std::exp(level - c);
    const Eigen::MatrixXd apex = s * U;
    const double h_apex =
        martin_value(h, ConePoint::psd(apex));
    apex_worst = std::max(apex_worst, std::abs(h_apex - level));
    csv_row(level, apex, h_apex);

    Json ldoc = Json::object();
    ldoc["level"] = json_num(level);
    const auto axyz = coords(apex);
    ldoc["apex"] = Json::array({json_num(axyz[0]), json_num(axyz[1]), json_num(axyz[2])});
    ldoc["apex_h"] = json_num(h_apex);

    Json sample_docs = Json::array();
    for (int i = 0; i < samples; ++i) {
      // Boundary points of the superlevel cone: apex + r w w^T with w not
      // parallel to the dominant direction of U.
      Eigen::Vector2d w;
      do {
        const double theta = rng.uniform(0.0, 3.14159265358979323846);
        w = Eigen::Vector2d(std::cos(theta), std::sin(theta));
      } while (std::abs(w.dot(u_dir.head<2>())) > 0.999);
      const double r = rng.log_uniform(1e-2, 10.0);
      const Eigen::MatrixXd x = apex + r * (w * w.transpose());
      const double hv = martin_value(h, ConePoint::psd(x));
      boundary_worst = std::max(boundary_worst, std::abs(hv - level));
      for (double lower : sorted_levels) {
        if (lower >= level) break;
        nesting_worst = std::max(nesting_worst, lower - hv);
      }
      const Eigen::VectorXd tx = op.apply(pack_square(x));
      const double h_tx = martin_value(h, ConePoint::from_packed(ConeKind::Psd, tx));
      mapping_worst = std::max(mapping_worst, (level + rho) - h_tx);
      ++mapping_checked;
      csv_row(level, x, hv);
      const auto xyz = coords(x);
      Json sd = Json::array({json_num(xyz[0]), json_num(xyz[1]), json_num(xyz[2]),
                             json_num(hv)});
      sample_docs.push_back(std::move(sd));
    }
    ldoc["samples"] = std::move(sample_docs);
    level_docs.push_back(std::move(ldoc));
  }
  rep["levels"] = std::move(level_docs);

  const double h_base = martin_value(h, base_pt);
  Json checks = Json::object();
  const auto check_entry = [](bool passed, double worst) {
    Json e = Json::object();
    e["passed"] = passed;
    e["worst"] = json_num(worst);
    return e;
  };
  const bool apex_ok = apex_worst <= 1e-9;
  const bool base_ok = std::abs(h_base) <= 1e-12;
  const bool boundary_ok = boundary_worst <= tol;
  const bool nesting_ok = nesting_worst <= tol;
  const bool mapping_ok = mapping_worst <= tol;
  checks["apex_formula"] = check_entry(apex_ok, apex_worst);
  checks["basepoint_level_zero"] = check_entry(base_ok, std::abs(h_base));
  checks["boundary_on_horosphere"] = check_entry(boundary_ok, boundary_worst);
  checks["nesting"] = check_entry(nesting_ok, nesting_worst);
  Json mapping = check_entry(mapping_ok, mapping_worst);
  mapping["count_checked"] = mapping_checked;
  checks["maps_horoball_forward"] = std::move(mapping);
  rep["checks"] = std::move(checks);
  rep["notices"] = std::move(notices);

  const bool all_ok = apex_ok && base_ok && boundary_ok && nesting_ok && mapping_ok;
  CommandResult result;
  result.exit_code = all_ok ? 0 : 2;
  rep["status"] = all_ok ? "verified" : "falsified";
  result.doc = std::move(rep);
  result.csv = std::move(csv);
  return result;
}

namespace {

std::string fmt17(double v) {
  if (!std::isfinite(v)) {
    if (std::isnan(v)) return "\"nan\"";
    return v > 0 ? "\"inf\"" : "\"-inf\"";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool all_numbers(const Json& arr) {
  for (const Json& v : arr)
    if (!v.is_number()) return false;
  return true;
}

void write_json(std::string& out, const Json& j, int depth) {
  const std::string pad(2 * std::size_t(depth), ' ');
  const std::string pad_in(2 * std::size_t(depth + 1), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in + Json(it.key()).dump() + ": ";
        write_json(out, it.value(), depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      if (all_numbers(j)) {  // numeric rows stay on one line
        out += "[";
        bool first = true;
        for (const Json& v : j) {
          if (!first) out += ", ";
          first = false;
          write_json(out, v, depth);
        }
        out += "]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const Json& v : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        write_json(out, v, depth + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float:
      out += fmt17(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string dump_report(const Json& doc) {
  std::string out;
  write_json(out, doc, 0);
  out += "\n";
  return out;
}

}  // namespace ratecert
