#include "ebu/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ebu/error.hpp"

namespace ebu {

double Episode::total_reward() const {
  double total = 0.0;
  for (const auto& t : transitions) total += t.r;
  return total;
}

bool is_valid_episode(const Episode& episode) {
  if (episode.empty()) return false;
  for (std::size_t t = 0; t < episode.size(); ++t) {
    const auto& tr = episode[t];
    if (!std::isfinite(tr.r)) return false;
    if (t + 1 < episode.size()) {
      if (tr.terminal) return false;
      if (tr.s_next != episode[t + 1].s) return false;
    }
  }
  return true;
}

QTable::QTable(std::size_t num_states, std::size_t num_actions, double init)
    : num_states_(num_states), num_actions_(num_actions), values_(num_states * num_actions, init) {}

double QTable::max_value(StateId s) const {
  auto r = row(s);
  return *std::max_element(r.begin(), r.end());
}

ActionId QTable::greedy_action(StateId s) const { return argmax(row(s)); }

double QTable::distance(const QTable& other) const {
  if (other.num_states_ != num_states_ || other.num_actions_ != num_actions_)
    throw InvalidArgument("QTable::distance: shape mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) d = std::max(d, std::abs(values_[i] - other.values_[i]));
  return d;
}

TabularMDP::TabularMDP(std::size_t num_states, std::size_t num_actions, double gamma)
    : num_states_(num_states),
      num_actions_(num_actions),
      gamma_(gamma),
      successor_(num_states * num_actions),
      reward_(num_states * num_actions, 0.0),
      terminal_(num_states, 0) {
  if (num_states == 0 || num_actions == 0) throw InvalidArgument("TabularMDP: empty state or action space");
  set_gamma(gamma);
  // Self-loops until wired.
  for (std::size_t s = 0; s < num_states; ++s)
    for (std::size_t a = 0; a < num_actions; ++a) successor_[s * num_actions + a] = static_cast<StateId>(s);
}

void TabularMDP::set_gamma(double gamma) {
  // gamma == 1 is allowed for finite-horizon domains; value_iteration guards divergence.
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("TabularMDP: gamma must lie in [0, 1]");
  gamma_ = gamma;
}

void TabularMDP::set_start_state(StateId s) {
  if (s >= num_states_) throw InvalidArgument("TabularMDP: start state out of range");
  start_ = s;
}

std::size_t TabularMDP::index(StateId s, ActionId a) const {
  if (s >= num_states_ || a >= num_actions_) {
    std::ostringstream msg;
    msg << "TabularMDP: (s=" << s << ", a=" << a << ") out of range";
    throw InvalidArgument(msg.str());
  }
  return static_cast<std::size_t>(s) * num_actions_ + a;
}

void TabularMDP::set_transition(StateId s, ActionId a, StateId next, double reward) {
  if (next >= num_states_) throw InvalidArgument("TabularMDP: successor out of range");
  if (!std::isfinite(reward)) throw InvalidArgument("TabularMDP: reward must be finite");
  if (is_terminal(s)) throw InvalidArgument("TabularMDP: terminal states are absorbing");
  auto i = index(s, a);
  successor_[i] = next;
  reward_[i] = reward;
}

void TabularMDP::set_terminal(StateId s) {
  if (s >= num_states_) throw InvalidArgument("TabularMDP: terminal state out of range");
  terminal_[s] = 1;
  for (std::size_t a = 0; a < num_actions_; ++a) {
    successor_[s * num_actions_ + a] = s;
    reward_[s * num_actions_ + a] = 0.0;
  }
}

double TabularMDP::max_abs_reward() const {
  double m = 0.0;
  for (double r : reward_) m = std::max(m, std::abs(r));
  return m;
}

TabularMDP::StepResult TabularMDP::step(StateId s, ActionId a) const {
  auto i = index(s, a);
  StateId next = successor_[i];
  return {next, reward_[i], is_terminal(next)};
}

QTable bellman_backup(const TabularMDP& mdp, const QTable& q) {
  QTable out(mdp.num_states(), mdp.num_actions());
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      StateId next = mdp.successor(s, a);
      double future = mdp.is_terminal(next) ? 0.0 : q.max_value(next);
      out(s, a) = mdp.reward(s, a) + mdp.gamma() * future;
    }
  }
  return out;
}

QTable value_iteration(const TabularMDP& mdp, double tol, long max_iters) {
  if (!(tol > 0.0)) throw InvalidArgument("value_iteration: tol must be positive");
  QTable q(mdp.num_states(), mdp.num_actions());
  double residual = std::numeric_limits<double>::infinity();
  for (long it = 0; it < max_iters; ++it) {
    QTable next = bellman_backup(mdp, q);
    residual = next.distance(q);
    q = std::move(next);
    if (residual <= tol) {
      // q is B(q_prev); report convergence only if q itself is a tol-fixed point.
      if (bellman_backup(mdp, q).distance(q) <= tol) return q;
    }
  }
  throw ConvergenceError("value_iteration did not converge", residual, max_iters);
}

ActionId argmax(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("argmax: empty row");
  ActionId best = 0;
  for (std::size_t a = 1; a < values.size(); ++a)
    if (values[a] > values[best]) best = static_cast<ActionId>(a);
  return best;
}

ActionId epsilon_greedy(std::span<const double> q_row, double epsilon, Rng& rng) {
  if (q_row.empty()) throw InvalidArgument("epsilon_greedy: empty row");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("epsilon_greedy: epsilon outside [0, 1]");
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
      std::uniform_int_distribution<std::size_t> pick(0, q_row.size() - 1);
      return static_cast<ActionId>(pick(rng));
    }
  }
  return argmax(q_row);
}

double epsilon_greedy_prob(std::span<const double> q_row, double epsilon, ActionId a) {
  double p = epsilon / static_cast<double>(q_row.size());
  if (argmax(q_row) == a) p += 1.0 - epsilon;
  return p;
}

Policy greedy_policy(const QTable& q) {
  return [q](StateId s) {
    std::vector<double> dist(q.num_actions(), 0.0);
    dist[q.greedy_action(s)] = 1.0;
    return dist;
  };
}

Policy fixed_action_policy(std::size_t num_actions, ActionId action) {
  if (action >= num_actions) throw InvalidArgument("fixed_action_policy: action out of range");
  return [num_actions, action](StateId) {
    std::vector<double> dist(num_actions, 0.0);
    dist[action] = 1.0;
    return dist;
  };
}

Episode rollout(const TabularMDP& mdp, const Policy& policy, Rng& rng, std::size_t max_steps) {
  if (max_steps < 1) throw InvalidArgument("rollout: max_steps must be at least 1");
  Episode episode;
  StateId s = mdp.start_state();
  for (std::size_t t = 0; t < max_steps; ++t) {
    auto dist = policy(s);
    if (dist.size() != mdp.num_actions()) throw InvalidArgument("rollout: policy returned wrong arity");
    std::discrete_distribution<ActionId> pick(dist.begin(), dist.end());
    ActionId a = pick(rng);
    auto [next, reward, done] = mdp.step(s, a);
    episode.transitions.push_back({s, a, reward, next, done, dist[a]});
    if (done) break;
    s = next;
  }
  return episode;
}

}  // namespace ebu
