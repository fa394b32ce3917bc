#include "ratecert/stochastic_games.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ratecert/common.hpp"

namespace ratecert {

void GameSpec::validate() const {
  if (states < 1) throw std::invalid_argument("GameSpec: no states");
  if (static_cast<int>(actions_a.size()) != states ||
      static_cast<int>(actions_b.size()) != states ||
      static_cast<int>(payoff.size()) != states ||
      static_cast<int>(transition.size()) != states)
    throw std::invalid_argument("GameSpec: per-state arrays must have `states` entries");
  for (int s = 0; s < states; ++s) {
    if (actions_a[s] < 1 || actions_b[s] < 1)
      throw std::invalid_argument("GameSpec: empty action set");
    if (static_cast<int>(payoff[s].size()) != actions_a[s] ||
        static_cast<int>(transition[s].size()) != actions_a[s])
      throw std::invalid_argument("GameSpec: payoff/transition rows mismatch");
    for (int a = 0; a < actions_a[s]; ++a) {
      if (static_cast<int>(payoff[s][a].size()) != actions_b[s] ||
          static_cast<int>(transition[s][a].size()) != actions_b[s])
        throw std::invalid_argument("GameSpec: payoff/transition cols mismatch");
      for (int b = 0; b < actions_b[s]; ++b) {
        const Eigen::VectorXd& q = transition[s][a][b];
        if (q.size() != states)
          throw std::invalid_argument("GameSpec: transition vector length mismatch");
        if (q.minCoeff() < -1e-12)
          throw std::invalid_argument("GameSpec: negative transition probability");
        if (std::abs(q.sum() - 1.0) > 1e-9)
          throw std::invalid_argument("GameSpec: transition probabilities must sum to 1");
      }
    }
  }
}

bool GameSpec::one_player() const {
  return std::all_of(actions_b.begin(), actions_b.end(),
                     [](int n) { return n == 1; });
}

bool GameSpec::deterministic() const {
  for (int s = 0; s < states; ++s)
    for (int a = 0; a < actions_a[s]; ++a)
      for (int b = 0; b < actions_b[s]; ++b) {
        const Eigen::VectorXd& q = transition[s][a][b];
        if (std::abs(q.maxCoeff() - 1.0) > 1e-12) return false;
        if (q.sum() - q.maxCoeff() > 1e-12) return false;
      }
  return true;
}

namespace {

// Simplex tableau for max c.y s.t. A y <= b, y >= 0 with b >= 0.
// Returns optimal objective; fills y and the constraint duals.
double simplex_max(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& c, Eigen::VectorXd& y,
                   Eigen::VectorXd& duals) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  Eigen::MatrixXd t(m + 1, n + m + 1);
  t.setZero();
  t.block(0, 0, m, n) = a;
  t.block(0, n, m, m).setIdentity();
  t.block(0, n + m, m, 1) = b;
  t.block(m, 0, 1, n) = -c.transpose();

  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  const double eps = 1e-12;
  for (int iter = 0; iter < 10000; ++iter) {
    // Bland's rule keeps the walk finite on degenerate tableaus.
    int enter = -1;
    for (int j = 0; j < n + m; ++j) {
      if (t(m, j) < -eps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) {
      y = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < m; ++i)
        if (basis[i] < n) y[basis[i]] = t(i, n + m);
      duals = t.block(m, n, 1, m).transpose();
      return t(m, n + m);
    }
    int leave = -1;
    double best = kInf;
    for (int i = 0; i < m; ++i) {
      if (t(i, enter) > eps) {
        const double ratio = t(i, n + m) / t(i, enter);
        if (ratio < best - eps ||
            (ratio < best + eps && (leave < 0 || basis[i] < basis[leave]))) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) throw std::runtime_error("matrix_game_value: unbounded LP");
    t.row(leave) /= t(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i == leave) continue;
      const double f = t(i, enter);
      if (f != 0.0) t.row(i) -= f * t.row(leave);
    }
    basis[leave] = enter;
  }
  throw std::runtime_error("matrix_game_value: pivot limit exceeded");
}

}  // namespace

MatrixGameSolution matrix_game_value(const Eigen::MatrixXd& payoff) {
  const int m = static_cast<int>(payoff.rows());
  const int n = static_cast<int>(payoff.cols());
  if (m == 0 || n == 0) throw std::invalid_argument("matrix_game_value: empty game");
  if (m > 50 || n > 50)
    throw std::invalid_argument("matrix_game_value: action sets capped at 50");
  MatrixGameSolution out;
  if (n == 1) {
    int best = 0;
    for (int a = 1; a < m; ++a)
      if (payoff(a, 0) > payoff(best, 0)) best = a;
    out.value = payoff(best, 0);
    out.row_strategy = Eigen::VectorXd::Zero(m);
    out.row_strategy[best] = 1.0;
    out.col_strategy = Eigen::VectorXd::Ones(1);
    return out;
  }
  if (m == 1) {
    int best = 0;
    for (int b = 1; b < n; ++b)
      if (payoff(0, b) < payoff(0, best)) best = b;
    out.value = payoff(0, best);
    out.row_strategy = Eigen::VectorXd::Ones(1);
    out.col_strategy = Eigen::VectorXd::Zero(n);
    out.col_strategy[best] = 1.0;
    return out;
  }

  // Shift the payoffs positive, then solve the scaled column-player LP
  //   max sum(y)  s.t.  G' y <= 1, y >= 0,
  // whose optimum is 1/value'; the row strategy comes out of the duals.
  const double shift = 1.0 - payoff.minCoeff();
  const Eigen::MatrixXd g = payoff.array() + shift;
  Eigen::VectorXd y, duals;
  const double obj =
      simplex_max(g, Eigen::VectorXd::Ones(m), Eigen::VectorXd::Ones(n), y, duals);
  if (obj <= 0.0) throw std::runtime_error("matrix_game_value: degenerate LP");
  const double w = 1.0 / obj;
  out.value = w - shift;
  out.col_strategy = w * y;
  out.row_strategy = w * duals;
  // Clean rounding noise so the strategies are proper distributions.
  auto normalize = [](Eigen::VectorXd& p) {
    for (int i = 0; i < p.size(); ++i) p[i] = std::max(p[i], 0.0);
    p /= p.sum();
  };
  normalize(out.col_strategy);
  normalize(out.row_strategy);
  return out;
}

Eigen::VectorXd shapley_apply(const GameSpec& game, const Eigen::VectorXd& x) {
  if (x.size() != game.states)
    throw std::invalid_argument("shapley_apply: state vector length mismatch");
  Eigen::VectorXd out(game.states);
  parallel_for(game.states, [&](int s) {
    Eigen::MatrixXd g(game.actions_a[s], game.actions_b[s]);
    for (int a = 0; a < game.actions_a[s]; ++a)
      for (int b = 0; b < game.actions_b[s]; ++b)
        g(a, b) = game.payoff[s][a][b] + game.transition[s][a][b].dot(x);
    out[s] = matrix_game_value(g).value;
  });
  return out;
}

GameSpec negate_transpose(const GameSpec& game) {
  GameSpec out;
  out.states = game.states;
  out.actions_a = game.actions_b;
  out.actions_b = game.actions_a;
  out.payoff.resize(game.states);
  out.transition.resize(game.states);
  for (int s = 0; s < game.states; ++s) {
    out.payoff[s].assign(game.actions_b[s],
                         std::vector<double>(game.actions_a[s], 0.0));
    out.transition[s].assign(
        game.actions_b[s],
        std::vector<Eigen::VectorXd>(game.actions_a[s]));
    for (int a = 0; a < game.actions_a[s]; ++a)
      for (int b = 0; b < game.actions_b[s]; ++b) {
        out.payoff[s][b][a] = -game.payoff[s][a][b];
        out.transition[s][b][a] = game.transition[s][a][b];
      }
  }
  return out;
}

double karp_cycle_mean(const Eigen::MatrixXd& weights) {
  const int n = static_cast<int>(weights.rows());
  if (n == 0 || weights.cols() != n)
    throw std::invalid_argument("karp_cycle_mean: square matrix required");
  // Super-source s = n with 0-weight edges to every vertex; D(k, v) = best
  // weight of a k-edge path from s to v.
  const int N = n + 1;
  Eigen::MatrixXd d(N + 1, n);
  d.setConstant(-kInf);
  d.row(1).setZero();
  for (int k = 2; k <= N; ++k) {
    for (int v = 0; v < n; ++v) {
      double best = -kInf;
      for (int u = 0; u < n; ++u) {
        if (d(k - 1, u) == -kInf || weights(u, v) == -kInf) continue;
        best = std::max(best, d(k - 1, u) + weights(u, v));
      }
      d(k, v) = best;
    }
  }
  double rho = -kInf;
  for (int v = 0; v < n; ++v) {
    if (d(N, v) == -kInf) continue;
    double worst = kInf;
    for (int k = 1; k < N; ++k) {
      if (d(k, v) == -kInf) continue;
      worst = std::min(worst, (d(N, v) - d(k, v)) / double(N - k));
    }
    rho = std::max(rho, worst);
  }
  if (rho == -kInf)
    throw std::domain_error("karp_cycle_mean: graph has no cycle");
  return rho;
}

std::vector<int> critical_cycle(const Eigen::MatrixXd& weights) {
  const int n = static_cast<int>(weights.rows());
  if (n == 0 || weights.cols() != n)
    throw std::invalid_argument("critical_cycle: square matrix required");
  // p[L](u,v) = best weight of an L-edge path u -> v. A maximum-mean cycle
  // shows up as argmax over closed walks p[L](v,v)/L, L <= n.
  std::vector<Eigen::MatrixXd> p(n + 1);
  p[1] = weights;
  for (int L = 2; L <= n; ++L) {
    p[L].resize(n, n);
    p[L].setConstant(-kInf);
    for (int u = 0; u < n; ++u)
      for (int k = 0; k < n; ++k) {
        if (p[L - 1](u, k) == -kInf) continue;
        for (int v = 0; v < n; ++v) {
          if (weights(k, v) == -kInf) continue;
          p[L](u, v) = std::max(p[L](u, v), p[L - 1](u, k) + weights(k, v));
        }
      }
  }
  int best_v = -1, best_len = 0;
  double best_mean = -kInf;
  for (int L = 1; L <= n; ++L)
    for (int v = 0; v < n; ++v) {
      if (p[L](v, v) == -kInf) continue;
      const double mean = p[L](v, v) / L;
      if (mean > best_mean + 1e-15) {
        best_mean = mean;
        best_v = v;
        best_len = L;
      }
    }
  if (best_v < 0) throw std::domain_error("critical_cycle: graph has no cycle");
  std::vector<int> cycle{best_v};
  int u = best_v;
  for (int L = best_len; L > 1; --L) {
    // Choose the next hop on a best path of the remaining length.
    int next = -1;
    for (int k = 0; k < n; ++k) {
      if (weights(u, k) == -kInf || p[L - 1](k, best_v) == -kInf) continue;
      if (std::abs(weights(u, k) + p[L - 1](k, best_v) - p[L](u, best_v)) <=
          1e-9 * std::max(1.0, std::abs(p[L](u, best_v)))) {
        next = k;
        break;
      }
    }
    if (next < 0) throw std::runtime_error("critical_cycle: backtrack failed");
    cycle.push_back(next);
    u = next;
  }
  cycle.push_back(best_v);
  return cycle;
}

GameSpec game_from_max_plus(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 0 || a.cols() != n)
    throw std::invalid_argument("game_from_max_plus: square matrix required");
  GameSpec g;
  g.states = n;
  g.actions_a.resize(n);
  g.actions_b.assign(n, 1);
  g.payoff.resize(n);
  g.transition.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (a(i, j) == -kInf) continue;
      g.payoff[i].push_back({a(i, j)});
      Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
      q[j] = 1.0;
      g.transition[i].push_back({q});
    }
    g.actions_a[i] = static_cast<int>(g.payoff[i].size());
    if (g.actions_a[i] == 0)
      throw std::invalid_argument("game_from_max_plus: row without finite entries");
  }
  return g;
}

Eigen::MatrixXd max_plus_weights(const GameSpec& game) {
  if (!game.one_player() || !game.deterministic())
    throw std::invalid_argument("max_plus_weights: game must be one-player deterministic");
  const int n = game.states;
  Eigen::MatrixXd w(n, n);
  w.setConstant(-kInf);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < game.actions_a[s]; ++a) {
      int dest = 0;
      game.transition[s][a][0].maxCoeff(&dest);
      w(s, dest) = std::max(w(s, dest), game.payoff[s][a][0]);
    }
  return w;
}

namespace {

double top_displacement(const GameSpec& game, const Eigen::VectorXd& y) {
  return (shapley_apply(game, y) - y).maxCoeff();
}

// Coordinate descent probe for rho_bar_plus = inf_y max(T(y) - y).
double probe_displacement(const GameSpec& game, Eigen::VectorXd y) {
  double best = top_displacement(game, y);
  double step = 1.0;
  for (int iter = 0; iter < 200 && step > 1e-12; ++iter) {
    bool improved = false;
    for (int i = 0; i < y.size(); ++i) {
      for (const double dir : {+1.0, -1.0}) {
        Eigen::VectorXd cand = y;
        cand[i] += dir * step;
        const double val = top_displacement(game, cand);
        if (val < best - 1e-15) {
          best = val;
          y = cand;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

struct HalfAnalysis {
  double rho = 0.0;
  double fekete = kInf;
  double displacement = kInf;
  double lower = -kInf;
  std::vector<CoordinateWitness> omegas;
  std::vector<int> cycle;
  std::vector<Eigen::VectorXd> iterates;
};

HalfAnalysis analyze_plus(const GameSpec& game, int horizon) {
  const int n = game.states;
  HalfAnalysis out;

  std::vector<Eigen::VectorXd>& iterates = out.iterates;
  iterates.reserve(horizon + 1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  iterates.push_back(x);
  for (int k = 1; k <= horizon; ++k) {
    x = shapley_apply(game, x);
    iterates.push_back(x);
    out.fekete = std::min(out.fekete, x.maxCoeff() / k);
    out.lower = std::max(out.lower, x.minCoeff() / k);  // order bound
  }

  // Displacement probes: early iterates, a strided tail, then local search.
  Eigen::VectorXd probe_start = iterates[0];
  for (int k = 0; k <= horizon; k += std::max(1, horizon / 32)) {
    const double d = top_displacement(game, iterates[k]);
    if (d < out.displacement) {
      out.displacement = d;
      probe_start = iterates[k];
    }
  }
  out.displacement = std::min(out.displacement, probe_displacement(game, probe_start));

  if (game.one_player() && game.deterministic()) {
    const Eigen::MatrixXd w = max_plus_weights(game);
    const double rho_cycle = karp_cycle_mean(w);
    out.cycle = critical_cycle(w);
    // The extracted cycle certifies its own mean: following it pumps the
    // cycle coordinates by (length * mean) every lap.
    double edge_sum = 0.0;
    for (std::size_t i = 0; i + 1 < out.cycle.size(); ++i)
      edge_sum += w(out.cycle[i], out.cycle[i + 1]);
    out.lower = std::max(out.lower, edge_sum / double(out.cycle.size() - 1));
    // Bellman closure of (W - rho): a finite super-eigenvector whose
    // displacement is exactly the cycle mean.
    Eigen::VectorXd bias = Eigen::VectorXd::Zero(n);
    for (int sweep = 0; sweep < n + 1; ++sweep) {
      for (int i = 0; i < n; ++i) {
        double best = bias[i];
        for (int j = 0; j < n; ++j)
          if (w(i, j) != -kInf)
            best = std::max(best, w(i, j) - rho_cycle + bias[j]);
        bias[i] = best;
      }
    }
    out.displacement = std::min(out.displacement, top_displacement(game, bias));
  }

  out.rho = std::min(out.fekete, out.displacement);

  const double tol = 1e-7 * horizon;
  CoordinateWitness least;
  least.violation = kInf;
  for (int omega = 0; omega < n; ++omega) {
    double worst = 0.0;
    for (int k = 1; k <= horizon; ++k) {
      const double shortfall = k * out.rho - (iterates[k][omega] - iterates[0][omega]);
      worst = std::max(worst, shortfall);
    }
    if (worst <= tol) {
      out.omegas.push_back({omega, worst, true});
    } else if (worst < least.violation) {
      least = {omega, worst, false};
    }
  }
  if (out.omegas.empty() && least.omega >= 0) out.omegas.push_back(least);
  return out;
}

}  // namespace

GameRateResult game_rate(const GameSpec& game, int horizon) {
  game.validate();
  if (horizon < 1) throw std::invalid_argument("game_rate: horizon < 1");
  if (horizon > 100000) throw std::invalid_argument("game_rate: horizon capped at 1e5");

  HalfAnalysis plus = analyze_plus(game, horizon);
  const HalfAnalysis dual = analyze_plus(negate_transpose(game), horizon);

  GameRateResult out;
  out.horizon = horizon;
  out.iterates = std::move(plus.iterates);
  out.rho_plus = plus.rho;
  out.fekete_upper = plus.fekete;
  out.displacement_upper = plus.displacement;
  out.lower_bound = plus.lower;
  out.omega_plus = plus.omegas;
  out.critical_cycle_plus = plus.cycle;
  out.rho_minus = -dual.rho;
  out.omega_minus = dual.omegas;
  return out;
}

}  // namespace ratecert
