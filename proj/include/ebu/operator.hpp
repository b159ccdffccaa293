#pragma once

#include <vector>

#include "ebu/mdp.hpp"

namespace ebu {

struct PathStep {
  StateId state;
  ActionId action;  // kNoAction at a terminal end state
};

/// A successor-following path from a query pair. steps[0] is the query (s, a);
/// steps[k] for k >= 1 are the pairs visited afterwards. A terminating path ends in
/// a terminal state with no action; a truncated one ends with an action taken.
struct Path {
  std::vector<PathStep> steps;
  bool terminal_reached = false;

  /// Number of steps after the query pair (the j-range of the backward return).
  std::size_t length() const noexcept { return steps.size() - 1; }
};

using PathSet = std::vector<Path>;

/// Positive weights over a path set, summing to 1.
struct Schedule {
  std::vector<double> weights;
  /// Throws InvalidArgument unless all weights are positive and sum to 1 within 1e-12.
  void validate(std::size_t num_paths) const;
};

struct OperatorConfig {
  double beta = 0.5;
  double gamma = 0.9;
  double epsilon_trunc = 1e-3;
  void validate() const;
};

/// All paths from (s, a) that reach a terminal within `max_len` steps after the
/// query, plus every non-terminating prefix of exactly `max_len` steps.
PathSet enumerate_paths(const TabularMDP& mdp, StateId s, ActionId a, std::size_t max_len);

/// Backward return of the first j steps of `path` (1 <= j <= length()):
///   sum_{k<j} (beta*gamma)^{k-1} {beta r(s_k,a_k) + (1-beta) Q(s_k,a_k)}
///     + (beta*gamma)^{j-1} max_{a != a_j} Q(s_j, a)
/// where the final max is 0 at a terminal s_j and the sole action's value when |A| = 1.
double backward_return(const TabularMDP& mdp, const Path& path, const QTable& q, std::size_t j,
                       const OperatorConfig& config);

/// max over j of backward_return, computed in one pass.
double max_backward_return(const TabularMDP& mdp, const Path& path, const QTable& q, const OperatorConfig& config);

/// Path sets and schedules for every state-action pair (empty for terminal states).
class OperatorSchedules {
 public:
  OperatorSchedules() = default;
  OperatorSchedules(const TabularMDP& mdp, std::size_t max_len);

  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_actions() const noexcept { return num_actions_; }
  std::size_t max_len() const noexcept { return max_len_; }
  std::size_t total_paths() const;
  /// True when some path was cut at max_len.
  bool truncated() const;

  const PathSet& paths(StateId s, ActionId a) const { return paths_[s * num_actions_ + a]; }
  const Schedule& schedule(StateId s, ActionId a) const { return schedules_[s * num_actions_ + a]; }
  Schedule& schedule(StateId s, ActionId a) { return schedules_[s * num_actions_ + a]; }

  static OperatorSchedules uniform(const TabularMDP& mdp, std::size_t max_len);
  /// Weights drawn uniformly in [0.05, 1] per path and normalized.
  static OperatorSchedules random(const TabularMDP& mdp, std::size_t max_len, Rng& rng);
  /// Path frequencies observed in rollout episodes plus a pseudo-count on every path,
  /// so unseen paths keep a positive weight.
  static OperatorSchedules empirical(const TabularMDP& mdp, std::size_t max_len, const std::vector<Episode>& episodes,
                                     double pseudo_count = 1.0);

 private:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::size_t max_len_ = 0;
  std::vector<PathSet> paths_;
  std::vector<Schedule> schedules_;
};

/// Reduced deterministic episodic backward operator:
///   (HQ)(s, a) = r(s, a) + gamma * sum_i w_i * max_j T_i(j), terminal rows 0.
QTable apply_operator(const TabularMDP& mdp, const QTable& q, const OperatorSchedules& schedules,
                      const OperatorConfig& config);

/// ||H q1 - H q2||_inf / ||q1 - q2||_inf. Throws InvalidArgument when q1 == q2.
double contraction_ratio(const TabularMDP& mdp, const QTable& q1, const QTable& q2, const OperatorSchedules& schedules,
                         const OperatorConfig& config);

struct FixedPointResult {
  QTable q;
  long iterations = 0;
  double last_change = 0.0;
};

/// Iterates Q <- HQ from zero until the sup-norm change is <= tol (tol must exceed
/// epsilon_trunc). Throws ConvergenceError after max_iters.
FixedPointResult fixed_point(const TabularMDP& mdp, const OperatorSchedules& schedules, const OperatorConfig& config,
                             double tol, long max_iters = 100'000);

/// n = ceil(log_gamma(epsilon (1 - gamma) / r_max)) + 1, at least 1, so that
/// r_max gamma^n / (1 - gamma) < epsilon. Returns 1 for gamma = 0.
std::size_t horizon_bound(double epsilon, double r_max, double gamma);

/// Path length that keeps the fixed point of the truncated operator within
/// epsilon_trunc / (1 - gamma) of Q*: horizon_bound(epsilon_trunc / 2, r_max, gamma).
std::size_t certified_max_len(const OperatorConfig& config, double r_max);

}  // namespace ebu
