#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ebu/approximator.hpp"
#include "ebu/config.hpp"
#include "ebu/environments.hpp"
#include "ebu/mdp.hpp"
#include "ebu/replay.hpp"

namespace ebu {

/// A deterministic tabular world plus how its states are shown to an approximator.
class Environment {
 public:
  Environment(TabularMDP mdp, std::size_t max_steps);

  /// Builds the environment named by `config` (chain, branching or maze).
  static Environment from_config(const EnvConfig& config, double gamma);

  const TabularMDP& mdp() const noexcept { return mdp_; }
  std::size_t max_steps() const noexcept { return max_steps_; }
  std::size_t num_actions() const noexcept { return mdp_.num_actions(); }

  const std::optional<MazeSpec>& maze() const noexcept { return maze_; }
  /// BFS shortest path length for mazes.
  std::optional<int> oracle_length() const noexcept { return oracle_length_; }

  std::size_t num_features() const noexcept { return num_features_; }
  /// Observation for an approximator; MNIST mode draws fresh images every call.
  Observation observe(StateId s, Rng& rng) const;

 private:
  TabularMDP mdp_;
  std::size_t max_steps_;
  std::optional<MazeSpec> maze_;
  std::optional<int> oracle_length_;
  std::shared_ptr<const DigitEncoder> digits_;
  std::size_t num_features_;
};

QFunction make_approximator(const ApproxConfig& config, const Environment& env, Rng& rng);

struct MetricRow {
  std::string run;
  std::uint64_t seed = 0;
  std::size_t step = 0;
  double eval_return = 0.0;
  std::optional<double> rel_length;
  double mean_q = 0.0;
  double seconds = 0.0;
};

struct EvalResult {
  double mean_return = 0.0;
  double mean_length = 0.0;
  double mean_q = 0.0;
  std::vector<Episode> episodes;
};

/// Plays `episodes` epsilon-greedy episodes from the start state with the given Q-function.
EvalResult evaluate(const Environment& env, const QFunction& q, std::size_t episodes, double epsilon, Rng& rng);

/// One backward-target regression step on a sampled episode: targets from `target`,
/// one gradient step of `online` over the whole episode. Returns the pre-step loss.
double ebu_update_step(QFunction& online, const QFunction& target, const Environment& env, const Episode& episode,
                       double beta, double gamma, double lr, Rng& rng);

struct RunResult {
  std::vector<MetricRow> metrics;
  QFunction online;
  std::size_t updates = 0;
  std::size_t episodes = 0;             // training episodes finished (terminal or timed out)
  std::size_t terminated_episodes = 0;  // of which reached a terminal state
};

/// One seeded training run of the interaction / storage / sampling / update loop.
RunResult train(const RunConfig& config, std::uint64_t seed, const std::string& run_id);

}  // namespace ebu
