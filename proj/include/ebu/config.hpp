#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ebu {

enum class LearnerKind { kEbu, kOneStep, kNStep, kQLambda, kRetrace };
enum class EpsilonShape { kLinear, kQuadratic };

std::string to_string(LearnerKind kind);
LearnerKind parse_learner_kind(const std::string& name);

struct EnvConfig {
  std::string kind = "chain";  // chain | branching | maze
  int branching_n = 4;
  double distractor_reward = 0.0;
  int maze_width = 10;
  int maze_height = 10;
  double wall_density = 0.2;
  std::uint64_t maze_seed = 0;
  std::string maze_file;            // text grid; overrides generation when set
  std::string observation = "coords";  // coords | mnist
  std::string mnist_images;
  std::string mnist_labels;
  std::size_t max_steps = 0;  // 0: 1000 for mazes, 100 otherwise
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::kEbu;
  double beta = 0.5;
  double gamma = 0.9;
  double lambda = 0.9;
  std::size_t n = 0;  // 0: the sampled episode's length
  std::size_t batch_size = 32;
  std::size_t replay_capacity = 30000;
  std::size_t update_period = 1;
  std::size_t target_sync = 100;
  double lr = 0.5;
  std::string episode_sampling = "uniform";  // uniform | length
};

struct ApproxConfig {
  std::string kind = "tabular";  // tabular | linear | dense
  std::vector<std::size_t> hidden{64};
};

struct RunSettings {
  std::string name = "run";
  std::size_t total_steps = 10000;
  std::size_t eval_period = 1000;
  std::size_t eval_episodes = 5;
  double eval_epsilon = 0.05;
  double epsilon_start = 1.0;
  double epsilon_end = 0.0;
  std::size_t epsilon_anneal = 0;  // 0: total_steps
  EpsilonShape epsilon_shape = EpsilonShape::kQuadratic;
  std::size_t seeds = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string output;
};

/// Everything a training run needs. Text form is `section.key = value` lines.
struct RunConfig {
  EnvConfig env;
  LearnerConfig learner;
  ApproxConfig approx;
  RunSettings run;

  /// Throws ConfigError on an invalid combination or out-of-range value.
  void validate() const;

  /// Applies one dotted key. Throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);

  /// Canonical text form; parse_config(to_text()) reproduces the config.
  std::string to_text() const;
};

/// Parses `key = value` lines; '#' starts a comment. Later keys override earlier ones.
std::map<std::string, std::string> parse_key_values(const std::string& text);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Epsilon at `step` (1-based) for the run's schedule.
double epsilon_at(const RunSettings& run, std::size_t step);

}  // namespace ebu
