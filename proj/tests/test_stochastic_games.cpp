#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>

#include "ratecert/common.hpp"
#include "ratecert/stochastic_games.hpp"

using namespace ratecert;

namespace {

Eigen::MatrixXd two_by_two(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

GameSpec single_state_game(const Eigen::MatrixXd& payoff) {
  GameSpec g;
  g.states = 1;
  g.actions_a = {static_cast<int>(payoff.rows())};
  g.actions_b = {static_cast<int>(payoff.cols())};
  g.payoff.resize(1);
  g.transition.resize(1);
  Eigen::VectorXd self(1);
  self << 1.0;
  g.payoff[0].resize(payoff.rows());
  g.transition[0].resize(payoff.rows());
  for (int a = 0; a < payoff.rows(); ++a) {
    g.payoff[0][a].assign(payoff.cols(), 0.0);
    g.transition[0][a].assign(payoff.cols(), self);
    for (int b = 0; b < payoff.cols(); ++b) g.payoff[0][a][b] = payoff(a, b);
  }
  return g;
}

GameSpec random_game(std::uint64_t seed, int max_extra_states = 2) {
  Rng rng(seed);
  GameSpec g;
  g.states = 2 + static_cast<int>(rng.below(max_extra_states));
  g.actions_a.assign(g.states, 2);
  g.actions_b.assign(g.states, 2);
  g.payoff.resize(g.states);
  g.transition.resize(g.states);
  for (int s = 0; s < g.states; ++s) {
    g.payoff[s].assign(2, std::vector<double>(2, 0.0));
    g.transition[s].assign(2, std::vector<Eigen::VectorXd>(2));
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        g.payoff[s][a][b] = rng.uniform(-1.0, 1.0);
        Eigen::VectorXd q(g.states);
        for (int t = 0; t < g.states; ++t) q[t] = rng.uniform01() + 0.05;
        g.transition[s][a][b] = q / q.sum();
      }
  }
  return g;
}

// Exhaustive simple-cycle enumeration; the canonical start vertex is the
// smallest on the cycle, so nothing is counted twice.
double brute_cycle_mean(const Eigen::MatrixXd& w) {
  const int n = static_cast<int>(w.rows());
  double best = -kInf;
  std::vector<int> path;
  std::vector<char> used(n, 0);
  std::function<void(int, int, double)> walk = [&](int start, int u,
                                                   double sum) {
    if (w(u, start) != -kInf)
      best = std::max(best, (sum + w(u, start)) / double(path.size()));
    for (int v = start + 1; v < n; ++v) {
      if (used[v] || w(u, v) == -kInf) continue;
      used[v] = 1;
      path.push_back(v);
      walk(start, v, sum + w(u, v));
      path.pop_back();
      used[v] = 0;
    }
  };
  for (int s = 0; s < n; ++s) {
    std::fill(used.begin(), used.end(), 0);
    used[s] = 1;
    path = {s};
    walk(s, s, 0.0);
  }
  return best;
}

}  // namespace

TEST_CASE("game spec validation and flags") {
  GameSpec g = random_game(7);
  CHECK_NOTHROW(g.validate());
  CHECK_FALSE(g.one_player());
  CHECK_FALSE(g.deterministic());

  GameSpec mp = game_from_max_plus(two_by_two(1, -kInf, -kInf, 3));
  CHECK_NOTHROW(mp.validate());
  CHECK(mp.one_player());
  CHECK(mp.deterministic());

  GameSpec empty;
  CHECK_THROWS_AS(empty.validate(), std::invalid_argument);

  GameSpec bad = random_game(7);
  bad.transition[0][0][0][0] = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  GameSpec sums = random_game(7);
  sums.transition[1][1][1][0] += 0.5;
  CHECK_THROWS_AS(sums.validate(), std::invalid_argument);

  GameSpec ragged = random_game(7);
  ragged.payoff[0][0].pop_back();
  CHECK_THROWS_AS(ragged.validate(), std::invalid_argument);
}

TEST_CASE("matrix game values on worked examples") {
  MatrixGameSolution pennies = matrix_game_value(two_by_two(1, -1, -1, 1));
  CHECK(pennies.value == doctest::Approx(0.0).scale(1).epsilon(1e-12));
  CHECK(pennies.row_strategy[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(pennies.col_strategy[0] == doctest::Approx(0.5).epsilon(1e-12));

  // row 0 dominates, column player then minimizes over its entries
  MatrixGameSolution dom = matrix_game_value(two_by_two(3, 2, 1, 0));
  CHECK(dom.value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(dom.row_strategy[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dom.col_strategy[1] == doctest::Approx(1.0).epsilon(1e-12));

  // fully mixed: v = (ad - bc) / (a + d - b - c)
  MatrixGameSolution mix = matrix_game_value(two_by_two(2, 0, 0, 1));
  CHECK(mix.value == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(mix.row_strategy[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(mix.row_strategy[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(mix.col_strategy[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // degenerate shapes
  Eigen::MatrixXd row(1, 3);
  row << 1, 2, 3;
  CHECK(matrix_game_value(row).value == doctest::Approx(1.0));
  Eigen::MatrixXd col(2, 1);
  col << 1, 5;
  CHECK(matrix_game_value(col).value == doctest::Approx(5.0));
  CHECK_THROWS_AS(matrix_game_value(Eigen::MatrixXd(0, 0)),
                  std::invalid_argument);

  // strategies come back as proper distributions guaranteeing the value
  for (std::uint64_t seed = 61; seed < 66; ++seed) {
    Rng rng(seed);
    const int m = 2 + static_cast<int>(rng.below(4));
    const int n = 2 + static_cast<int>(rng.below(4));
    Eigen::MatrixXd a(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-2.0, 2.0);
    MatrixGameSolution s = matrix_game_value(a);
    CHECK(s.row_strategy.minCoeff() >= 0.0);
    CHECK(s.col_strategy.minCoeff() >= 0.0);
    CHECK(s.row_strategy.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.col_strategy.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((a.transpose() * s.row_strategy).minCoeff() >= s.value - 1e-9);
    CHECK((a * s.col_strategy).maxCoeff() <= s.value + 1e-9);
  }
}

TEST_CASE("fictitious play brackets the simplex value") {
  for (std::uint64_t seed = 21; seed < 31; ++seed) {
    Rng rng(seed);
    const int m = 2 + static_cast<int>(rng.below(5));
    const int n = 2 + static_cast<int>(rng.below(7));
    Eigen::MatrixXd a(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = rng.uniform(-2.0, 2.0);
    const double v = matrix_game_value(a).value;

    Eigen::VectorXd cr = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd cc = Eigen::VectorXd::Zero(n);
    int ia = 0, ib = 0;
    for (int t = 0; t < 100000; ++t) {
      cr[ia] += 1.0;
      cc[ib] += 1.0;
      (a * cc).maxCoeff(&ia);
      (a.transpose() * cr).minCoeff(&ib);
    }
    const Eigen::VectorXd p = cr / cr.sum();
    const Eigen::VectorXd q = cc / cc.sum();
    const double lo = (a.transpose() * p).minCoeff();
    const double hi = (a * q).maxCoeff();
    // any strategy pair brackets the value; the play converges on top
    CHECK(lo <= v + 1e-9);
    CHECK(hi >= v - 1e-9);
    CHECK(hi - lo < 5e-2);
  }
}

TEST_CASE("shapley operator steps") {
  GameSpec mp = game_from_max_plus(two_by_two(1, -kInf, -kInf, 3));
  Eigen::VectorXd zero2 = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd step = shapley_apply(mp, zero2);
  CHECK(step[0] == doctest::Approx(1.0));
  CHECK(step[1] == doctest::Approx(3.0));

  GameSpec pennies = single_state_game(two_by_two(1, -1, -1, 1));
  Eigen::VectorXd x1(1);
  x1 << 4.5;
  CHECK(shapley_apply(pennies, x1)[0] == doctest::Approx(4.5).epsilon(1e-12));

  GameSpec mixed = single_state_game(two_by_two(2, 0, 0, 1));
  CHECK(shapley_apply(mixed, Eigen::VectorXd::Zero(1))[0] ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  CHECK_THROWS_AS(shapley_apply(mp, Eigen::VectorXd::Zero(3)),
                  std::invalid_argument);

  // top non-expansiveness and commutation with constants, sampled
  GameSpec g = random_game(7);
  Rng rng(99);
  for (int it = 0; it < 2000; ++it) {
    Eigen::VectorXd x(g.states), y(g.states);
    for (int i = 0; i < g.states; ++i) {
      x[i] = rng.uniform(-5.0, 5.0);
      y[i] = rng.uniform(-5.0, 5.0);
    }
    const double before = std::max((x - y).maxCoeff(), 0.0);
    const double after =
        std::max((shapley_apply(g, x) - shapley_apply(g, y)).maxCoeff(), 0.0);
    CHECK(after <= before + 1e-9);
    const double c = rng.uniform(-3.0, 3.0);
    const Eigen::VectorXd shifted =
        shapley_apply(g, x + c * Eigen::VectorXd::Ones(g.states));
    CHECK((shifted - shapley_apply(g, x) - c * Eigen::VectorXd::Ones(g.states))
              .lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("negate_transpose swaps roles and is an involution") {
  GameSpec g = random_game(7);
  GameSpec ng = negate_transpose(g);
  CHECK(ng.actions_a == g.actions_b);
  CHECK(ng.actions_b == g.actions_a);
  CHECK(ng.payoff[0][1][0] == -g.payoff[0][0][1]);
  CHECK((ng.transition[1][0][1] - g.transition[1][1][0])
            .lpNorm<Eigen::Infinity>() == 0.0);

  GameSpec back = negate_transpose(ng);
  for (int s = 0; s < g.states; ++s)
    for (int a = 0; a < g.actions_a[s]; ++a)
      for (int b = 0; b < g.actions_b[s]; ++b)
        CHECK(back.payoff[s][a][b] == g.payoff[s][a][b]);

  // x -> -T(-x) realized on state vectors
  Rng rng(5);
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd x(g.states);
    for (int i = 0; i < g.states; ++i) x[i] = rng.uniform(-4.0, 4.0);
    const Eigen::VectorXd lhs = shapley_apply(ng, x);
    const Eigen::VectorXd rhs = -shapley_apply(g, -x);
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-9);
  }
}

TEST_CASE("karp cycle means on worked graphs") {
  CHECK(karp_cycle_mean(two_by_two(1, -kInf, -kInf, 3)) == doctest::Approx(3.0));

  CHECK(karp_cycle_mean(two_by_two(-kInf, 0, 4, -kInf)) ==
        doctest::Approx(2.0));

  // self loops at 1 and 2 lose to the two-cycle (0 + 5)/2
  CHECK(karp_cycle_mean(two_by_two(1, 0, 5, 2)) == doctest::Approx(2.5));

  CHECK_THROWS_AS(karp_cycle_mean(two_by_two(-kInf, 0, -kInf, -kInf)),
                  std::domain_error);
  CHECK_THROWS_AS(karp_cycle_mean(Eigen::MatrixXd(2, 3)),
                  std::invalid_argument);
}

TEST_CASE("karp agrees with exhaustive cycle enumeration") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    Rng rng(seed);
    const int n = 2 + static_cast<int>(rng.below(5));
    Eigen::MatrixXd w(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        w(i, j) = rng.uniform01() < 0.4 ? -kInf : rng.uniform(-3.0, 3.0);
    const double brute = brute_cycle_mean(w);
    if (brute == -kInf) {
      CHECK_THROWS_AS(karp_cycle_mean(w), std::domain_error);
      continue;
    }
    CHECK(karp_cycle_mean(w) == doctest::Approx(brute).epsilon(1e-12));

    const std::vector<int> cyc = critical_cycle(w);
    REQUIRE(cyc.size() >= 2);
    CHECK(cyc.front() == cyc.back());
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cyc.size(); ++i) {
      REQUIRE(w(cyc[i], cyc[i + 1]) != -kInf);
      sum += w(cyc[i], cyc[i + 1]);
    }
    CHECK(sum / double(cyc.size() - 1) ==
          doctest::Approx(brute).epsilon(1e-12));
  }
}

TEST_CASE("max-plus game round trip") {
  Eigen::MatrixXd a(3, 3);
  a << 1, -kInf, 0.5, -kInf, -2, -kInf, 3, -kInf, 0;
  GameSpec g = game_from_max_plus(a);
  CHECK(g.one_player());
  CHECK(g.deterministic());
  const Eigen::MatrixXd back = max_plus_weights(g);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(back(i, j) == a(i, j));

  Eigen::MatrixXd dead(2, 2);
  dead << 1, 2, -kInf, -kInf;
  CHECK_THROWS_AS(game_from_max_plus(dead), std::invalid_argument);
  CHECK_THROWS_AS(max_plus_weights(random_game(7)), std::invalid_argument);
}

TEST_CASE("game rates on worked examples") {
  GameRateResult diag =
      game_rate(game_from_max_plus(two_by_two(1, -kInf, -kInf, 3)), 100);
  CHECK(diag.rho_plus == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(diag.rho_minus == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(diag.fekete_upper == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(diag.displacement_upper == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(diag.lower_bound == doctest::Approx(3.0).epsilon(1e-12));
  REQUIRE(diag.omega_plus.size() == 1);
  CHECK(diag.omega_plus[0].omega == 1);
  CHECK(diag.omega_plus[0].passed);
  CHECK(diag.omega_plus[0].violation == 0.0);
  REQUIRE(diag.omega_minus.size() == 1);
  CHECK(diag.omega_minus[0].omega == 0);
  CHECK(diag.omega_minus[0].passed);
  REQUIRE(diag.critical_cycle_plus.size() == 2);
  CHECK(diag.critical_cycle_plus[0] == 1);
  CHECK(diag.critical_cycle_plus[1] == 1);

  GameRateResult cyc =
      game_rate(game_from_max_plus(two_by_two(-kInf, 0, 4, -kInf)), 100);
  CHECK(cyc.rho_plus == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(cyc.rho_minus == doctest::Approx(2.0).epsilon(1e-12));
  REQUIRE(cyc.omega_plus.size() == 1);
  CHECK(cyc.omega_plus[0].omega == 1);  // state 1 banks the 4-edge first

  GameRateResult single =
      game_rate(single_state_game(two_by_two(2, 0, 0, 1)), 200);
  CHECK(single.rho_plus == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(single.rho_minus == doctest::Approx(2.0 / 3.0).epsilon(1e-9));

  CHECK_THROWS_AS(game_rate(single_state_game(two_by_two(2, 0, 0, 1)), 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      game_rate(single_state_game(two_by_two(2, 0, 0, 1)), 100001),
      std::invalid_argument);
}

TEST_CASE("seeded games: duality order and witness audit") {
  for (std::uint64_t seed = 41; seed < 51; ++seed) {
    GameSpec g = random_game(seed);
    GameRateResult r = game_rate(g, 300);
    CHECK(r.rho_minus <= r.rho_plus + 1e-9);
    CHECK(r.rho_plus <= r.fekete_upper + 1e-12);
    CHECK(r.rho_plus <= r.displacement_upper + 1e-12);
    CHECK(r.lower_bound <= r.rho_plus + 1e-7 * 300);

    // the dual analysis is literally the negated-transposed game's
    GameRateResult rn = game_rate(negate_transpose(g), 300);
    CHECK(r.rho_minus == doctest::Approx(-rn.rho_plus).epsilon(1e-12));
    CHECK(r.rho_plus == doctest::Approx(-rn.rho_minus).epsilon(1e-12));

    // recompute every passed witness from the recorded iterates
    REQUIRE(r.iterates.size() == 301);
    for (const CoordinateWitness& w : r.omega_plus) {
      if (!w.passed) continue;
      double worst = 0.0;
      for (int k = 1; k <= 300; ++k)
        worst = std::max(worst, k * r.rho_plus - (r.iterates[k][w.omega] -
                                                  r.iterates[0][w.omega]));
      CHECK(worst == doctest::Approx(w.violation).scale(1).epsilon(1e-12));
      CHECK(worst <= 1e-7 * 300);
    }
  }
}
