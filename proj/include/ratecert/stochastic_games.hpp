#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ratecert {

// Finite zero-sum stochastic game with state-dependent action sets.
// payoff[s][a][b] is the stage payoff to the maximizer, transition[s][a][b]
// a probability vector over successor states.
struct GameSpec {
  int states = 0;
  std::vector<int> actions_a;
  std::vector<int> actions_b;
  std::vector<std::vector<std::vector<double>>> payoff;
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> transition;

  void validate() const;
  bool one_player() const;     // every state has a single minimizer action
  bool deterministic() const;  // every transition is a point mass
};

struct MatrixGameSolution {
  double value = 0.0;
  Eigen::VectorXd row_strategy;
  Eigen::VectorXd col_strategy;
};

// Value and optimal mixed strategies of the zero-sum matrix game, dense
// simplex on the standard LP formulation. Deterministic pivoting.
MatrixGameSolution matrix_game_value(const Eigen::MatrixXd& payoff);

// One step of the Shapley operator, x'(s) = val_{a,b}[g + q . x].
Eigen::VectorXd shapley_apply(const GameSpec& game, const Eigen::VectorXd& x);

// The game realizing x -> -T(-x): payoffs negated, player roles swapped.
GameSpec negate_transpose(const GameSpec& game);

// Maximum cycle mean of a weighted digraph, -inf marking absent edges
// (Karp's dynamic program on a super-source extension). Throws when the
// graph has no cycle.
double karp_cycle_mean(const Eigen::MatrixXd& weights);

// A cycle attaining the maximum mean (vertex list, closed), via the
// closed-walk dynamic program.
std::vector<int> critical_cycle(const Eigen::MatrixXd& weights);

// One-player deterministic game as a max-plus matrix and back.
GameSpec game_from_max_plus(const Eigen::MatrixXd& a);
Eigen::MatrixXd max_plus_weights(const GameSpec& game);  // requires both flags

struct CoordinateWitness {
  int omega = -1;
  double violation = 0.0;  // worst shortfall over the horizon (0 when passed)
  bool passed = false;
};

struct GameRateResult {
  double rho_plus = 0.0;
  double rho_minus = 0.0;
  int horizon = 0;
  double fekete_upper = 0.0;        // min_k max_omega T^k(0)/k
  double displacement_upper = 0.0;  // best probed max_omega(T(y) - y)
  double lower_bound = 0.0;         // order bound / critical-cycle bound
  std::vector<CoordinateWitness> omega_plus;
  std::vector<CoordinateWitness> omega_minus;
  std::vector<int> critical_cycle_plus;  // one-player deterministic only
  std::vector<Eigen::VectorXd> iterates;  // T^k(0), k = 0..horizon
};

// Escape rate analysis of the Shapley operator in the top hemi-norm:
// rho_plus = lim max_omega T^k(0)(omega)/k and the dual via x -> -T(-x).
GameRateResult game_rate(const GameSpec& game, int horizon);

}  // namespace ratecert
