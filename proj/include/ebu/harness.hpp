#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ebu/config.hpp"
#include "ebu/operator.hpp"
#include "ebu/targets.hpp"
#include "ebu/training.hpp"

namespace ebu {

// ---- metrics ---------------------------------------------------------------

/// agent_len / oracle_len. Throws InvalidArgument when oracle_len <= 0.
double relative_length(double agent_len, double oracle_len);

/// (agent - baseline) / (max(human, baseline) - random). Throws on a zero denominator.
double relative_score(double agent, double baseline, double human, double random);

/// (agent - random) / |human - random|. Throws when human == random.
double human_normalized_score(double agent, double human, double random);

/// Mean of Q(s_t, a_t) over every transition of the episodes.
double mean_q_diagnostic(const std::vector<Episode>& episodes, const ActionValueFn& q);

// ---- CSV -------------------------------------------------------------------

inline constexpr const char* kCsvHeader = "run,seed,step,eval_return,rel_length,mean_q,seconds";

std::string to_csv_line(const MetricRow& row);
/// Inverse of to_csv_line. Throws FormatError on a malformed line.
MetricRow parse_csv_line(const std::string& line);
void write_csv(std::ostream& out, const std::vector<MetricRow>& rows);

// ---- experiments -----------------------------------------------------------

struct ExperimentResult {
  /// Rows ordered by step, then by seed, so runs interleave.
  std::vector<MetricRow> rows;
  std::vector<RunResult> runs;
};

/// Trains seeds run.seed .. run.seed + run.seeds - 1 (on up to run.threads threads)
/// and merges their metric rows. Run ids are "<name>-s<seed>".
ExperimentResult run_experiment(const RunConfig& config);

// ---- chain figure ----------------------------------------------------------

struct Fig1Curve {
  std::vector<std::size_t> updates;  // 1..num_updates_max
  std::vector<double> ebu;
  std::vector<double> uniform;
};

/// True when the greedy policy (lowest index on ties) moves right in s1, s2 and s3.
bool chain_policy_optimal(const QTable& q);

/// Probability of the optimal chain policy after k single-transition updates of the
/// stored revisit episode (learning rate 1, gamma 0.9). EBU replays the episode
/// backward, repeating the pass; uniform draws transitions with replacement.
Fig1Curve fig1_probability_curve(std::size_t num_updates_max, std::size_t trials, Rng& rng);

// ---- operator verification -------------------------------------------------

/// Random deterministic MDP with rewards in [-1, 1]; the last `num_terminal` states are
/// terminal and state 0 is the start.
TabularMDP random_mdp(std::size_t num_states, std::size_t num_actions, std::size_t num_terminal, double gamma,
                      Rng& rng);

struct OperatorCheckSettings {
  std::size_t contraction_draws = 200;
  std::size_t contraction_max_len = 5;
  std::size_t fixed_point_draws = 50;
  double fixed_point_gamma = 0.5;
  double fixed_point_epsilon_trunc = 1e-2;
  double fixed_point_tol = 2e-2;
};

struct OperatorReport {
  std::size_t contraction_draws = 0;
  std::size_t contraction_failures = 0;
  double worst_ratio_minus_gamma = -1.0;  // max over draws of ratio - gamma
  double worst_ratio = 0.0;
  std::size_t fixed_point_draws = 0;
  std::size_t fixed_point_failures = 0;
  double worst_fixed_point_slack = -1.0;  // max of error - allowed bound
  bool passed() const { return contraction_failures == 0 && fixed_point_failures == 0; }
};

/// Contraction draws: MDPs of 2..6 states x 2..3 actions, gamma in {0.5, 0.9, 0.99},
/// beta in {0, 0.3, 0.5, 1}, random schedules, random Q pairs. Fixed-point draws:
/// 2..6 states x 2..3 actions at a certified path length, two random schedules each,
/// compared against value iteration.
OperatorReport verify_operator(const OperatorCheckSettings& settings, Rng& rng);

void print_operator_report(std::ostream& out, const OperatorReport& report);

// ---- maze benchmark --------------------------------------------------------

struct MazeBenchSettings {
  std::vector<double> densities{0.2, 0.3, 0.4, 0.5};
  std::size_t mazes = 10;
  std::size_t seeds = 3;
  std::vector<LearnerKind> learners{LearnerKind::kEbu, LearnerKind::kOneStep, LearnerKind::kNStep};
  double ebu_beta = 1.0;
  /// Extra EBU runs at this beta for the mean-Q comparison against ebu_beta.
  double compare_beta = 0.5;
  bool compare_mean_q = true;
};

/// Splits `bench.*` keys off a config text; the rest must be a RunConfig.
std::pair<RunConfig, MazeBenchSettings> parse_maze_bench(const std::string& text);

struct MazeBenchCell {
  double density = 0.0;
  std::string learner;
  std::vector<double> final_rel_lengths;  // one per (maze, seed)
  double median_rel_length = 0.0;
};

struct MazeBenchResult {
  std::vector<MazeBenchCell> cells;
  /// Matched checkpoints where the high-beta run's mean Q exceeds the low-beta run's.
  std::size_t mean_q_higher = 0;
  std::size_t mean_q_checkpoints = 0;
  std::vector<MetricRow> rows;
  double seconds = 0.0;

  double median(double density, const std::string& learner) const;
};

/// Every learner on `mazes` generated mazes per density, `seeds` seeds each, with the
/// hyperparameters of `base` shared by all learners.
MazeBenchResult run_maze_bench(const RunConfig& base, const MazeBenchSettings& settings);

void print_maze_bench(std::ostream& out, const MazeBenchResult& result);

}  // namespace ebu
