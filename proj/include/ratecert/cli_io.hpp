#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "ratecert/certificates.hpp"
#include "ratecert/escape_estimation.hpp"
#include "ratecert/stochastic_games.hpp"

namespace ratecert {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolName = "ratecert";
inline constexpr const char* kToolVersion = "0.1.0";

// A problem document with every default filled in. echo is the normalized
// form: parse_problem(echo) reproduces the same ProblemFile, field for field.
struct ProblemFile {
  Operator op;
  HemiMetric metric;
  Eigen::VectorXd start;
  std::vector<Eigen::VectorXd> dual_seeds;
  int horizon = 2000;
  std::uint64_t seed = 12345;
  double verify_tol = 1e-9;
  double interval_tol = 1e-8;
  int y_alpha_levels = 20;
  int pumping_steps = 20;
  Json echo;

  ProblemFile()
      : op(Operator::translation(Eigen::VectorXd::Zero(1))),
        metric(SpaceKind::RealVectorSpace, MetricKind::Top, 1) {}
};

// Schema errors throw std::invalid_argument carrying the offending field
// path, e.g. "operator.M[2]: expected a number". Unknown keys are rejected.
ProblemFile parse_problem(const Json& doc);

// Operator / metric / point serialization used by the problem echo and the
// report bodies. Non-finite reals travel as the strings "inf" / "-inf".
Operator parse_operator(const Json& value, const std::string& path);
Json emit_operator(const Operator& op);
GameSpec parse_game(const Json& value, const std::string& path);
Json emit_game(const GameSpec& game);
Json emit_metric(const HemiMetric& metric);
Json emit_point(SpaceKind space, int dimension, const Eigen::VectorXd& packed);
Eigen::VectorXd parse_point(SpaceKind space, int dimension, const Json& value,
                            const std::string& path);
Json json_num(double v);
double num_from(const Json& v, const std::string& path);

struct CommandResult {
  Json doc;
  std::string csv;    // filled by run_horoballs when the problem asks for it
  int exit_code = 0;  // 0 verified, 2 falsified, 3 inconclusive
};

// rate: estimate + certificate search + certified interval.
CommandResult run_rate(const Json& problem_doc);
// certify: verify user-supplied certificates against the problem operator.
CommandResult run_certify(const Json& doc);
// check-space: sampled hemi-metric axioms and geodesic identities.
CommandResult run_check_space(const Json& doc);
// game: escape-rate analysis of a stochastic game in the top hemi-norm.
CommandResult run_game(const Json& doc);
// horoballs: horoball geometry of a certified dual direction (2x2 Riccati).
CommandResult run_horoballs(const Json& doc);

// Serializer for reports: 17 significant digits on doubles so values
// round-trip exactly, two-space indent, keys in insertion order.
std::string dump_report(const Json& doc);

}  // namespace ratecert
