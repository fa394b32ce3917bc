#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "ratecert/cli_io.hpp"

using namespace ratecert;

namespace {

const double kLog3 = std::log(3.0);

Json matrix_problem() {
  return Json::parse(R"({
    "operator": {"kind": "nonneg-matrix", "M": [[2, 1], [1, 2]]},
    "metric": {"kind": "rfunk"},
    "start": [1, 1]
  })");
}

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path =
      (std::filesystem::temp_directory_path() / ("ratecert_test_" + name))
          .string();
  std::ofstream out(path);
  out << text;
  return path;
}

// Runs the installed binary, returns the exit code and captures stdout.
int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd =
      std::string(RATECERT_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string text;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) text.append(buf, got);
  const int rc = pclose(pipe);
  if (out) *out = text;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("problem parsing fills defaults and echoes a fixed point") {
  Json full = Json::parse(R"({
    "operator": {"kind": "nonneg-matrix", "M": [[2, 1], [1, 2]]},
    "metric": {"kind": "thompson"},
    "start": [0.5, 2],
    "dual_seeds": [[1, 0], [1, 1]],
    "horizon": 600,
    "seed": 99,
    "tolerances": {"verify": 1e-10, "interval": 1e-7},
    "schedules": {"y_alpha_levels": 12, "pumping_steps": 30}
  })");
  ProblemFile p = parse_problem(full);
  CHECK(p.metric.kind() == MetricKind::Thompson);
  CHECK(p.horizon == 600);
  CHECK(p.seed == 99);
  CHECK(p.verify_tol == 1e-10);
  CHECK(p.interval_tol == 1e-7);
  CHECK(p.y_alpha_levels == 12);
  CHECK(p.pumping_steps == 30);
  CHECK(p.start[1] == 2.0);
  REQUIRE(p.dual_seeds.size() == 2);
  CHECK(p.dual_seeds[0][1] == 0.0);

  // the echo parses back to itself, field for field
  ProblemFile again = parse_problem(p.echo);
  CHECK(again.echo == p.echo);
  CHECK(dump_report(again.echo) == dump_report(p.echo));

  // defaults: natural metric, ones start, documented knobs
  ProblemFile minimal = parse_problem(Json::parse(
      R"({"operator": {"kind": "nonneg-matrix", "M": [[2, 1], [1, 2]]}})"));
  CHECK(minimal.metric.kind() == MetricKind::Rfunk);
  CHECK(minimal.start.size() == 2);
  CHECK(minimal.start[0] == 1.0);
  CHECK(minimal.horizon == 2000);
  CHECK(minimal.seed == 12345);
  CHECK(minimal.verify_tol == 1e-9);
  CHECK(minimal.interval_tol == 1e-8);
  CHECK(minimal.y_alpha_levels == 20);
  CHECK(minimal.pumping_steps == 20);
  CHECK(minimal.echo["metric"]["kind"] == "rfunk");
  CHECK(minimal.echo["start"] == Json::parse("[1, 1]"));
}

TEST_CASE("schema errors carry the offending field path") {
  Json doc = matrix_problem();
  doc["bogus"] = 1;
  CHECK_THROWS_WITH_AS(parse_problem(doc), "bogus: unknown field",
                       std::invalid_argument);

  Json extra = matrix_problem();
  extra["operator"]["extra"] = 2;
  CHECK_THROWS_WITH_AS(parse_problem(extra), "operator.extra: unknown field",
                       std::invalid_argument);

  CHECK_THROWS_WITH_AS(
      parse_problem(Json::parse(R"({"operator": {"M": [[1]]}})")),
      "operator.kind: missing required field", std::invalid_argument);

  Json badkind = matrix_problem();
  badkind["metric"]["kind"] = "banana";
  CHECK_THROWS_WITH_AS(parse_problem(badkind),
                       "metric.kind: unknown metric kind 'banana'",
                       std::invalid_argument);

  Json badnum = matrix_problem();
  badnum["operator"]["M"][1][0] = "soon";
  CHECK_THROWS_WITH_AS(parse_problem(badnum),
                       "operator.M[1][0]: expected a number (or \"inf\"/\"-inf\")",
                       std::invalid_argument);

  // metric constructors re-fail under the metric path
  Json mismatch = matrix_problem();
  mismatch["metric"] = Json::parse(R"({"kind": "top"})");
  CHECK_THROWS_AS(parse_problem(mismatch), std::invalid_argument);
  try {
    parse_problem(mismatch);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).rfind("metric: ", 0) == 0);
  }

  Json outside = matrix_problem();
  outside["start"] = Json::parse("[1, -1]");
  CHECK_THROWS_WITH_AS(parse_problem(outside), "start: point outside the domain",
                       std::invalid_argument);
}

TEST_CASE("numbers round trip through reports at full precision") {
  for (double v : {0.1 + 0.2, M_PI, 1e-9, -123.456789012345678, 3.0}) {
    Json doc = Json::object();
    doc["v"] = json_num(v);
    const std::string text = dump_report(doc);
    const Json back = Json::parse(text);
    CHECK(num_from(back["v"], "v") == v);
  }
  CHECK(json_num(kInf) == Json("inf"));
  CHECK(json_num(-kInf) == Json("-inf"));
  CHECK(num_from(Json("inf"), "x") == kInf);
  CHECK(num_from(Json("-inf"), "x") == -kInf);
  CHECK_THROWS_WITH_AS(num_from(Json("soon"), "x"),
                       "x: expected a number (or \"inf\"/\"-inf\")",
                       std::invalid_argument);
  CHECK_THROWS_AS(num_from(Json(true), "x"), std::invalid_argument);
}

TEST_CASE("points and games parse with path-prefixed errors") {
  // small asymmetry within tolerance is symmetrized away
  Json near = Json::parse("[[1, 1e-13], [0, 2]]");
  const Eigen::VectorXd packed =
      parse_point(SpaceKind::PsdConeInterior, 2, near, "u");
  CHECK(packed[1] == doctest::Approx(5e-14).epsilon(1e-6));
  CHECK(packed[1] == packed[2]);

  CHECK_THROWS_WITH_AS(parse_point(SpaceKind::PsdConeInterior, 2,
                                   Json::parse("[[1, 0.5], [0, 2]]"), "u"),
                       "u: matrix is not symmetric", std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_point(SpaceKind::StandardConeInterior, 3,
                                   Json::parse("[1, 2]"), "start"),
                       "start: expected a vector of length 3",
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_point(SpaceKind::TorusTimesLine, 2,
                                   Json::parse("[0.1, 2, 3]"), "start"),
                       "start: expected a vector of length 2",
                       std::invalid_argument);

  Json game = Json::parse(R"({
    "states": 2, "actions_a": [1, 1], "actions_b": [1, 1],
    "payoff": [[[1]], [[0]]],
    "transition": [[[[0.5, 0.5]]], [[[1]]]]
  })");
  CHECK_THROWS_WITH_AS(parse_game(game, "game"),
                       "game.transition[1][0][0]: distribution length must equal states",
                       std::invalid_argument);
}

TEST_CASE("run_rate certifies the perron example") {
  CommandResult r = run_rate(matrix_problem());
  CHECK(r.exit_code == 0);
  CHECK(r.doc["status"] == "verified");
  const Json& iv = r.doc["interval"];
  const double lower = num_from(iv["lower"], "lower");
  const double upper = num_from(iv["upper"], "upper");
  CHECK(lower <= kLog3);
  CHECK(upper >= kLog3);
  CHECK(upper - lower < 1e-6);
  CHECK(iv["lower_source"] == "dual");
  CHECK(iv["upper_source"] == "primal");
  CHECK(iv["nonempty"] == true);
  CHECK(iv["units"] == "log-gauge");
  CHECK(r.doc["estimate"]["exact"].is_null());
  CHECK(r.doc["estimate"]["orbit_truncated"] == false);
  CHECK(r.doc["certificates"]["primal"]["status"] == "verified");
  CHECK(r.doc["certificates"]["dual"]["status"] == "verified");
  CHECK_FALSE(r.doc.contains("maximin"));

  // identity translation: exact zero interval
  CommandResult ident = run_rate(Json::parse(
      R"({"operator": {"kind": "translation", "c": [0, 0], "norm_kind": "top"}})"));
  CHECK(ident.exit_code == 0);
  CHECK(num_from(ident.doc["interval"]["lower"], "l") == 0.0);
  CHECK(num_from(ident.doc["interval"]["upper"], "u") == 0.0);
  CHECK(ident.doc["interval"]["lower_source"] == "exact");
  CHECK(ident.doc["interval"]["upper_source"] == "exact");
}

TEST_CASE("run_rate reports the torus maximin gap") {
  Json doc = Json::parse(R"({
    "operator": {"kind": "torus-shift", "alpha": 0.3, "t_step": 1},
    "start": [0.9, 5],
    "horizon": 10000
  })");
  CommandResult r = run_rate(doc);
  CHECK(r.exit_code == 0);
  CHECK(r.doc["status"] == "verified");
  CHECK(num_from(r.doc["interval"]["lower"], "l") == 1.0);
  CHECK(num_from(r.doc["interval"]["upper"], "u") == 1.0);
  CHECK(r.doc["interval"]["lower_source"] == "exact");

  REQUIRE(r.doc.contains("maximin"));
  CHECK(r.doc["maximin"]["applicable"] == false);
  CHECK(num_from(r.doc["maximin"]["rho_bar_upper"], "r") ==
        doctest::Approx(1.3).epsilon(1e-9));
  CHECK(num_from(r.doc["maximin"]["gap_vs_rate_upper"], "g") ==
        doctest::Approx(0.3).epsilon(1e-9));

  bool found = false;
  for (const Json& n : r.doc["notices"])
    found = found || n == "not star-shaped: maximin not applicable";
  CHECK(found);
}

TEST_CASE("reports are deterministic up to the timestamp") {
  Json doc = matrix_problem();
  Json a = run_rate(doc).doc;
  Json b = run_rate(doc).doc;
  a.erase("timestamp");
  b.erase("timestamp");
  CHECK(dump_report(a) == dump_report(b));
}

TEST_CASE("run_horoballs sections the riccati dual direction") {
  Json doc = Json::parse(R"({
    "operator": {"kind": "riccati",
                 "A": [[0.5, 0.1], [0.1, 0.3]],
                 "B": [[1, 0], [0, 0]],
                 "M": [[2, 0], [0, 2]]},
    "samples": 350,
    "csv": true
  })");
  CommandResult r = run_horoballs(doc);
  CHECK(r.exit_code == 0);
  CHECK(r.doc["status"] == "verified");

  const double mu = num_from(r.doc["dual"]["mu"], "mu");
  CHECK(mu == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(num_from(r.doc["rho"], "rho") ==
        doctest::Approx(std::log(4.0)).epsilon(1e-9));
  CHECK(r.doc["horofunction"] == true);

  for (const char* name : {"apex_formula", "basepoint_level_zero",
                           "boundary_on_horosphere", "nesting",
                           "maps_horoball_forward"})
    CHECK(r.doc["checks"][name]["passed"] == true);
  CHECK(r.doc["checks"]["maps_horoball_forward"]["count_checked"] == 1050);

  REQUIRE(r.doc["levels"].size() == 3);
  CHECK(num_from(r.doc["levels"][0]["level"], "l0") == 0.0);
  CHECK(num_from(r.doc["levels"][1]["level"], "l1") ==
        doctest::Approx(std::log(4.0)).epsilon(1e-9));
  CHECK(num_from(r.doc["levels"][2]["level"], "l2") ==
        doctest::Approx(2 * std::log(4.0)).epsilon(1e-9));

  CHECK(r.csv.rfind("level,x11,x22,sqrt2_x12,h\n", 0) == 0);
  CHECK(std::count(r.csv.begin(), r.csv.end(), '\n') > 100);

  CHECK_THROWS_WITH_AS(
      run_horoballs(Json::parse(
          R"({"operator": {"kind": "nonneg-matrix", "M": [[2]]}})")),
      "operator: horoballs need a 2x2 riccati operator", std::invalid_argument);
}

TEST_CASE("binary: exit codes over the subcommands") {
  const std::string cert_path = write_temp("cert.json", R"({
    "operator": {"kind": "nonneg-matrix", "M": [[2, 1], [1, 2]]},
    "certificates": [
      {"type": "primal", "y": [1, 1], "mu": 3.0},
      {"type": "dual", "u": [1, 1], "mu": 3.0},
      {"type": "dual", "u": [1, 1], "mu": 3.5},
      {"type": "eval-form", "anchor": [0, 0], "rate": 1.0}
    ]
  })");
  std::string out;
  CHECK(run_cli("certify " + cert_path, &out) == 2);
  const Json cert = Json::parse(out);
  CHECK(cert["status"] == "falsified");
  CHECK(cert["summary"]["verified"] == 2);
  CHECK(cert["summary"]["falsified"] == 1);
  CHECK(cert["summary"]["inconclusive"] == 1);
  CHECK(cert["certificates"][2]["result"]["reason"] ==
        "gauge_m(T_r(u) / u) falls short of mu");
  CHECK(cert["certificates"][3]["result"]["reason"] ==
        "metric has no finite extreme form set");

  // thompson straight lines are not geodesics on the 3d cone
  const std::string cs_path = write_temp("cs.json", R"({
    "space": "standard-cone-interior", "dimension": 3,
    "metric": {"kind": "thompson"}, "geodesic": "thompson-straight",
    "samples": 2000, "checks": ["star-shaped"]
  })");
  CHECK(run_cli("check-space " + cs_path, &out) == 2);
  const Json cs = Json::parse(out);
  CHECK(cs["status"] == "falsified");
  CHECK(cs["checks"][0]["name"] == "star-shaped");
  CHECK(cs["checks"][0]["passed"] == false);
  CHECK(num_from(cs["checks"][0]["max_excess"], "e") > 1e-3);

  const std::string game_path = write_temp("game.json", R"({
    "game": {"states": 1, "actions_a": [2], "actions_b": [2],
             "payoff": [[[1, -1], [-1, 1]]],
             "transition": [[[[1], [1]], [[1], [1]]]]},
    "horizon": 3000
  })");
  CHECK(run_cli("game " + game_path, &out) == 0);
  const Json g = Json::parse(out);
  CHECK(g["status"] == "verified");
  CHECK(num_from(g["rho_plus"], "rp") == doctest::Approx(0.0).scale(1));
  CHECK(g["checks"]["rho_order_ok"] == true);

  // flag overrides reach the echoed problem
  const std::string m_path = write_temp("m.json", dump_report(matrix_problem()));
  CHECK(run_cli("rate " + m_path + " --horizon 50", &out) == 0);
  CHECK(Json::parse(out)["problem"]["horizon"] == 50);

  // usage errors: no subcommand, missing file
  CHECK(run_cli("", nullptr) == 1);
  CHECK(run_cli("rate /nonexistent/problem.json", nullptr) == 1);
}
