#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "ratecert/cli_io.hpp"

namespace {

struct Options {
  std::string problem_path;
  std::string out_path;
  std::string csv_path;
  std::uint64_t seed = 0;
  double tol = 0.0;
  int horizon = 0;
  bool has_seed = false;
  bool has_tol = false;
  bool has_horizon = false;
};

ratecert::Json load_problem(const Options& opt) {
  std::ifstream in(opt.problem_path);
  if (!in) throw std::runtime_error("cannot open " + opt.problem_path);
  ratecert::Json doc;
  try {
    doc = ratecert::Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(opt.problem_path + ": " + e.what());
  }
  if (!doc.is_object()) throw std::runtime_error(opt.problem_path + ": expected a JSON object");

  // Flag overrides beat file values so the echoed problem reflects the run.
  if (opt.has_seed) doc["seed"] = opt.seed;
  if (opt.has_horizon) doc["horizon"] = opt.horizon;
  if (opt.has_tol) {
    if (doc.contains("tolerances") || doc.contains("operator")) {
      if (!doc.contains("tolerances")) doc["tolerances"] = ratecert::Json::object();
      doc["tolerances"]["verify"] = opt.tol;
    } else {
      doc["tol"] = opt.tol;
    }
  }
  return doc;
}

int emit(const ratecert::CommandResult& result, const Options& opt) {
  const std::string text = ratecert::dump_report(result.doc);
  if (opt.out_path.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    std::ofstream out(opt.out_path);
    if (!out) throw std::runtime_error("cannot write " + opt.out_path);
    out << text;
  }
  if (!opt.csv_path.empty()) {
    if (result.csv.empty())
      throw std::runtime_error("no CSV in this result; pass \"csv\": true or use horoballs");
    std::ofstream out(opt.csv_path);
    if (!out) throw std::runtime_error("cannot write " + opt.csv_path);
    out << result.csv;
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"escape rate estimation and certification for non-expansive maps"};
  app.require_subcommand(1);

  Options opt;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("problem", opt.problem_path, "problem JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out_path, "write the report here instead of stdout");
    auto* s = sub->add_option("--seed", opt.seed, "override the problem seed");
    auto* t = sub->add_option("--tol", opt.tol, "override the verification tolerance");
    auto* h = sub->add_option("--horizon", opt.horizon, "override the orbit horizon");
    sub->callback([&, s, t, h] {
      opt.has_seed = s->count() > 0;
      opt.has_tol = t->count() > 0;
      opt.has_horizon = h->count() > 0;
    });
  };

  CLI::App* rate = app.add_subcommand("rate", "estimate the escape rate and certify an interval");
  CLI::App* certify = app.add_subcommand("certify", "verify user-supplied certificates");
  CLI::App* check = app.add_subcommand("check-space", "sample hemi-metric and geodesic axioms");
  CLI::App* game = app.add_subcommand("game", "escape rate analysis of a stochastic game");
  CLI::App* horo = app.add_subcommand("horoballs", "horoball sections of a certified direction");
  for (CLI::App* sub : {rate, certify, check, game, horo}) add_common(sub);
  horo->add_option("--csv", opt.csv_path, "also write the samples as CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    const ratecert::Json doc = load_problem(opt);
    ratecert::CommandResult result;
    if (rate->parsed()) {
      result = ratecert::run_rate(doc);
    } else if (certify->parsed()) {
      result = ratecert::run_certify(doc);
    } else if (check->parsed()) {
      result = ratecert::run_check_space(doc);
    } else if (game->parsed()) {
      result = ratecert::run_game(doc);
    } else {
      if (!opt.csv_path.empty()) {
        ratecert::Json with_csv = doc;
        with_csv["csv"] = true;
        result = ratecert::run_horoballs(with_csv);
      } else {
        result = ratecert::run_horoballs(doc);
      }
    }
    return emit(result, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
