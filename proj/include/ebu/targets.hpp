#pragma once

#include <functional>
#include <vector>

#include "ebu/mdp.hpp"

namespace ebu {

/// Action values of a state under some Q-function (typically the target network).
using ActionValueFn = std::function<std::vector<double>(StateId)>;

/// Wraps a table as an ActionValueFn. The table is copied.
ActionValueFn table_values(QTable q);

/// Weight of a newly propagated backward target against the pre-existing value; in [0, 1].
class DiffusionCoefficient {
 public:
  explicit DiffusionCoefficient(double beta);
  double value() const noexcept { return beta_; }
  operator double() const noexcept { return beta_; }

 private:
  double beta_;
};

struct BackwardTargetBatch {
  /// q_tilde[k][a]: column k holds the values of the successor state of step k.
  std::vector<std::vector<double>> q_tilde;
  std::vector<double> y;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Single-episode tabular backward update with learning rate 1: for t = T..1,
/// Q(s_t, a_t) <- r_t + gamma * max_a' Q(s_{t+1}, a'), terminal successors count as 0.
/// Throws InvalidArgument for a non-terminal episode.
QTable tabular_ebu_update(QTable q, const Episode& episode, double gamma);

/// Backward target generation over a sampled episode.
///
/// The temporary table is filled from `target_q` on every successor state. The last
/// target is R_T (terminal) or R_T + gamma * max Q~[., T] (truncated). Walking back,
/// the taken action's entry of column k is blended toward y_{k+1} with weight beta
/// and y_k = R_k + gamma * max_a Q~[a, k].
BackwardTargetBatch ebu_targets(const Episode& episode, const ActionValueFn& target_q, DiffusionCoefficient beta,
                                double gamma);

/// r + gamma * max_a target_q(s')[a], or r when s' is terminal.
double one_step_target(const Transition& t, const ActionValueFn& target_q, double gamma);

/// n-step returns clipped at the episode end; the bootstrap term is dropped when the
/// window reaches a terminal transition.
std::vector<double> nstep_targets(const Episode& episode, const ActionValueFn& target_q, double gamma, std::size_t n);

struct RetraceConfig {
  double lambda = 1.0;
  /// mu(a_t | x_t) for each step of the episode.
  std::vector<double> behavior_probs;
  /// Target-policy distribution pi(. | x); used for E_pi Q and the trace ratios.
  Policy target_policy;
};

/// c_t = lambda * min(1, pi(a_t|x_t) / mu(a_t|x_t)).
std::vector<double> retrace_coefficients(const Episode& episode, const RetraceConfig& config);

/// Backward Retrace corrections:
///   dQ_{t-1} = c_t * lambda * dQ_t + [r_{t-1} + gamma * E_pi Q(x_t, .) - Q(x_{t-1}, a_{t-1})]
/// with dQ = 0 past the end of the episode (terminal successors contribute no bootstrap).
std::vector<double> retrace_targets(const Episode& episode, const ActionValueFn& q, const RetraceConfig& config,
                                    double gamma);

/// Epsilon-greedy distribution over `q` (greedy ties broken toward the lowest index).
Policy epsilon_greedy_policy(ActionValueFn q, std::size_t num_actions, double epsilon);

/// Watkins Q(lambda) with accumulating traces, applied online along the episode.
/// A step whose action is not greedy under the current table cuts all traces, and
/// the exploratory pair itself only receives its one-step error. Greedy ties count
/// as greedy.
QTable watkins_q_lambda_update(QTable q, const Episode& episode, double lambda, double gamma, double alpha);

}  // namespace ebu
