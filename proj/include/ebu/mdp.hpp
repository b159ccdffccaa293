#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace ebu {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;
using Rng = std::mt19937_64;

inline constexpr ActionId kNoAction = static_cast<ActionId>(-1);

struct Transition {
  StateId s = 0;
  ActionId a = 0;
  double r = 0.0;
  StateId s_next = 0;
  bool terminal = false;
  /// Probability the behavior policy assigned to `a`; used by off-policy corrections.
  double behavior_prob = 1.0;
};

/// A contiguous run of transitions. Only the last one may be terminal; an
/// episode whose last transition is non-terminal was truncated.
struct Episode {
  std::vector<Transition> transitions;

  std::size_t size() const noexcept { return transitions.size(); }
  bool empty() const noexcept { return transitions.empty(); }
  bool terminated() const noexcept { return !empty() && transitions.back().terminal; }
  const Transition& operator[](std::size_t i) const { return transitions[i]; }
  double total_reward() const;
};

/// True when consecutive transitions chain and only the last may be terminal.
bool is_valid_episode(const Episode& episode);

/// Dense state-action value table, row-major by state.
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t num_states, std::size_t num_actions, double init = 0.0);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }

  double& operator()(StateId s, ActionId a) { return values_[s * num_actions_ + a]; }
  double operator()(StateId s, ActionId a) const { return values_[s * num_actions_ + a]; }

  std::span<const double> row(StateId s) const {
    return {values_.data() + s * num_actions_, num_actions_};
  }
  std::span<double> row(StateId s) { return {values_.data() + s * num_actions_, num_actions_}; }

  double max_value(StateId s) const;
  ActionId greedy_action(StateId s) const;

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  /// Sup-norm distance; tables must have the same shape.
  double distance(const QTable& other) const;

  bool operator==(const QTable&) const = default;

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> values_;
};

/// Finite deterministic MDP. Terminal states are absorbing with zero reward.
class TabularMDP {
 public:
  TabularMDP(std::size_t num_states, std::size_t num_actions, double gamma);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  double gamma() const noexcept { return gamma_; }
  void set_gamma(double gamma);

  StateId start_state() const noexcept { return start_; }
  void set_start_state(StateId s);

  StateId successor(StateId s, ActionId a) const { return successor_[index(s, a)]; }
  double reward(StateId s, ActionId a) const { return reward_[index(s, a)]; }
  bool is_terminal(StateId s) const { return terminal_.at(s) != 0; }

  /// Sets g(s, a) = next and r(s, a) = reward. Rejected on terminal states.
  void set_transition(StateId s, ActionId a, StateId next, double reward);
  /// Marks `s` terminal and rewires it as a zero-reward self-loop.
  void set_terminal(StateId s);

  /// Largest absolute reward.
  double max_abs_reward() const;

  /// One environment step from `s`; the bool is true when the successor is terminal.
  struct StepResult {
    StateId next;
    double reward;
    bool done;
  };
  StepResult step(StateId s, ActionId a) const;

 private:
  std::size_t index(StateId s, ActionId a) const;

  std::size_t num_states_;
  std::size_t num_actions_;
  double gamma_;
  StateId start_ = 0;
  std::vector<StateId> successor_;
  std::vector<double> reward_;
  std::vector<std::uint8_t> terminal_;
};

/// One Bellman optimality backup: r(s,a) + gamma * max_a' Q(g(s,a), a'); terminal rows are 0.
QTable bellman_backup(const TabularMDP& mdp, const QTable& q);

/// Solves for Q* by repeated Bellman backups until the sup-norm residual drops to `tol`.
/// Throws ConvergenceError (carrying the last residual) if `max_iters` is exhausted.
QTable value_iteration(const TabularMDP& mdp, double tol = 1e-10, long max_iters = 1'000'000);

/// Index of the largest entry, lowest index on ties.
ActionId argmax(std::span<const double> values);

/// Uniform random action with probability epsilon, otherwise argmax.
ActionId epsilon_greedy(std::span<const double> q_row, double epsilon, Rng& rng);

/// Probability that epsilon_greedy picks `a` for the given row.
double epsilon_greedy_prob(std::span<const double> q_row, double epsilon, ActionId a);

/// Maps a state to a distribution over actions.
using Policy = std::function<std::vector<double>(StateId)>;

Policy greedy_policy(const QTable& q);
Policy fixed_action_policy(std::size_t num_actions, ActionId action);

/// Runs `policy` from the start state until termination or `max_steps` transitions.
Episode rollout(const TabularMDP& mdp, const Policy& policy, Rng& rng, std::size_t max_steps);

}  // namespace ebu
