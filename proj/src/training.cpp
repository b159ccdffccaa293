#include "ebu/training.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

#include "ebu/error.hpp"
#include "ebu/targets.hpp"

namespace ebu {
namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open maze file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ActionValueFn values_of(const QFunction& q, const Environment& env, Rng& rng) {
  return [&q, &env, &rng](StateId s) { return q.predict(env.observe(s, rng)); };
}

std::vector<Sample> make_samples(const Episode& episode, const std::vector<Observation>& obs,
                                 const std::vector<double>& y) {
  std::vector<Sample> batch;
  batch.reserve(episode.size());
  for (std::size_t i = 0; i < episode.size(); ++i) batch.push_back({&obs[i], episode[i].a, y[i]});
  return batch;
}

std::vector<Observation> observe_episode(const Episode& episode, const Environment& env, Rng& rng) {
  std::vector<Observation> obs;
  obs.reserve(episode.size());
  for (const auto& t : episode.transitions) obs.push_back(env.observe(t.s, rng));
  return obs;
}

constexpr std::uint64_t kEvalStream = 0x9e3779b97f4a7c15ULL;

}  // namespace

Environment::Environment(TabularMDP mdp, std::size_t max_steps)
    : mdp_(std::move(mdp)), max_steps_(max_steps), num_features_(mdp_.num_states()) {
  if (max_steps_ == 0) throw InvalidArgument("Environment: max_steps must be positive");
}

Environment Environment::from_config(const EnvConfig& config, double gamma) {
  if (config.kind == "chain") {
    return Environment(make_chain(gamma), config.max_steps ? config.max_steps : 100);
  }
  if (config.kind == "branching") {
    return Environment(make_branching(config.branching_n, gamma, config.distractor_reward),
                       config.max_steps ? config.max_steps : 100);
  }
  if (config.kind != "maze") throw ConfigError("unknown env.kind " + config.kind);

  MazeSpec spec;
  if (!config.maze_file.empty()) {
    spec = maze_from_text(read_text(config.maze_file));
  } else {
    Rng maze_rng(config.maze_seed);
    spec = generate_maze(config.maze_width, config.maze_height, config.wall_density, maze_rng).maze;
  }
  Environment env(maze_to_mdp(spec, gamma), config.max_steps ? config.max_steps : maze::kMaxEpisodeSteps);
  env.oracle_length_ = shortest_path_len(spec);
  if (config.observation == "mnist") {
    if (spec.width > 10 || spec.height > 10) throw ConfigError("mnist observations need coordinates below 10");
    env.digits_ = std::make_shared<const DigitEncoder>(load_idx(config.mnist_images, config.mnist_labels));
    const auto& images = env.digits_->images();
    env.num_features_ = 2 * images.rows * images.cols;
  } else {
    env.num_features_ = static_cast<std::size_t>(spec.width + spec.height);
  }
  env.maze_ = std::move(spec);
  return env;
}

Observation Environment::observe(StateId s, Rng& rng) const {
  Observation obs;
  obs.state = s;
  obs.features.assign(num_features_, 0.0);
  if (!maze_) {
    obs.features[s] = 1.0;
    return obs;
  }
  Cell c = maze_->cell_of(s);
  if (digits_) {
    MazeObservation m = digits_->encode(c, rng);
    std::copy(m.x_image.begin(), m.x_image.end(), obs.features.begin());
    std::copy(m.y_image.begin(), m.y_image.end(), obs.features.begin() + static_cast<long>(m.x_image.size()));
  } else {
    obs.features[static_cast<std::size_t>(c.x)] = 1.0;
    obs.features[static_cast<std::size_t>(maze_->width + c.y)] = 1.0;
  }
  return obs;
}

QFunction make_approximator(const ApproxConfig& config, const Environment& env, Rng& rng) {
  switch (parse_approximator_kind(config.kind)) {
    case ApproximatorKind::kTabular:
      return QFunction::tabular(env.mdp().num_states(), env.num_actions());
    case ApproximatorKind::kLinear:
      return QFunction::linear(env.num_features(), env.num_actions());
    case ApproximatorKind::kDense:
      return QFunction::dense(env.num_features(), config.hidden, env.num_actions(), rng);
  }
  throw ConfigError("unknown approximator kind " + config.kind);
}

EvalResult evaluate(const Environment& env, const QFunction& q, std::size_t episodes, double epsilon, Rng& rng) {
  if (episodes == 0) throw InvalidArgument("evaluate: need at least one episode");
  EvalResult result;
  double q_sum = 0.0;
  std::size_t q_count = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    Episode episode;
    StateId s = env.mdp().start_state();
    for (std::size_t t = 0; t < env.max_steps(); ++t) {
      auto values = q.predict(env.observe(s, rng));
      ActionId a = epsilon_greedy(values, epsilon, rng);
      q_sum += values[a];
      ++q_count;
      auto st = env.mdp().step(s, a);
      episode.transitions.push_back({s, a, st.reward, st.next, st.done, epsilon_greedy_prob(values, epsilon, a)});
      if (st.done) break;
      s = st.next;
    }
    result.mean_return += episode.total_reward();
    result.mean_length += static_cast<double>(episode.size());
    result.episodes.push_back(std::move(episode));
  }
  result.mean_return /= static_cast<double>(episodes);
  result.mean_length /= static_cast<double>(episodes);
  result.mean_q = q_sum / static_cast<double>(q_count);
  return result;
}

double ebu_update_step(QFunction& online, const QFunction& target, const Environment& env, const Episode& episode,
                       double beta, double gamma, double lr, Rng& rng) {
  auto batch = ebu_targets(episode, values_of(target, env, rng), DiffusionCoefficient(beta), gamma);
  auto obs = observe_episode(episode, env, rng);
  auto samples = make_samples(episode, obs, batch.y);
  return online.grad_step(samples, lr);
}

RunResult train(const RunConfig& config, std::uint64_t seed, const std::string& run_id) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const LearnerConfig& lc = config.learner;
  Environment env = Environment::from_config(config.env, lc.gamma);

  Rng rng(seed);
  Rng eval_rng(seed ^ kEvalStream);
  RunResult result{{}, make_approximator(config.approx, env, rng)};
  QFunction& online = result.online;
  QFunction target = online.sync_target();
  ReplayMemory memory(lc.replay_capacity);
  const EpisodeSampling sampling =
      lc.episode_sampling == "length" ? EpisodeSampling::kLengthProportional : EpisodeSampling::kUniform;

  auto update = [&]() {
    if (lc.kind == LearnerKind::kOneStep) {
      if (memory.empty()) return;
      auto batch = memory.sample_uniform(lc.batch_size, rng);
      auto target_fn = values_of(target, env, rng);
      std::vector<Observation> obs;
      obs.reserve(batch.size());
      std::vector<Sample> samples;
      samples.reserve(batch.size());
      for (const auto& t : batch) obs.push_back(env.observe(t.s, rng));
      for (std::size_t i = 0; i < batch.size(); ++i)
        samples.push_back({&obs[i], batch[i].a, one_step_target(batch[i], target_fn, lc.gamma)});
      online.grad_step(samples, lc.lr);
      ++result.updates;
      return;
    }
    if (memory.num_complete_episodes() == 0) return;
    Episode episode = memory.sample_episode(rng, sampling);
    switch (lc.kind) {
      case LearnerKind::kEbu:
        ebu_update_step(online, target, env, episode, lc.beta, lc.gamma, lc.lr, rng);
        break;
      case LearnerKind::kNStep: {
        std::size_t n = lc.n ? lc.n : episode.size();
        auto y = nstep_targets(episode, values_of(target, env, rng), lc.gamma, n);
        auto obs = observe_episode(episode, env, rng);
        online.grad_step(make_samples(episode, obs, y), lc.lr);
        break;
      }
      case LearnerKind::kRetrace: {
        auto target_fn = values_of(target, env, rng);
        RetraceConfig rc;
        rc.lambda = lc.lambda;
        for (const auto& t : episode.transitions) rc.behavior_probs.push_back(t.behavior_prob);
        rc.target_policy = epsilon_greedy_policy(target_fn, env.num_actions(), config.run.eval_epsilon);
        auto delta = retrace_targets(episode, target_fn, rc, lc.gamma);
        std::vector<double> y(episode.size());
        for (std::size_t i = 0; i < episode.size(); ++i) y[i] = target_fn(episode[i].s)[episode[i].a] + delta[i];
        auto obs = observe_episode(episode, env, rng);
        online.grad_step(make_samples(episode, obs, y), lc.lr);
        break;
      }
      case LearnerKind::kQLambda: {
        QTable table = watkins_q_lambda_update(online.to_table(), episode, lc.lambda, lc.gamma, lc.lr);
        std::copy(table.values().begin(), table.values().end(), online.parameters().begin());
        break;
      }
      case LearnerKind::kOneStep:
        break;
    }
    ++result.updates;
  };

  StateId s = env.mdp().start_state();
  std::size_t episode_steps = 0;
  for (std::size_t step = 1; step <= config.run.total_steps; ++step) {
    const double eps = epsilon_at(config.run, step);
    auto values = online.predict(env.observe(s, rng));
    ActionId a = epsilon_greedy(values, eps, rng);
    auto st = env.mdp().step(s, a);
    memory.store({s, a, st.reward, st.next, st.done, epsilon_greedy_prob(values, eps, a)});
    ++episode_steps;
    if (st.done) {
      ++result.episodes;
      ++result.terminated_episodes;
      s = env.mdp().start_state();
      episode_steps = 0;
    } else if (episode_steps >= env.max_steps()) {
      memory.end_episode();
      ++result.episodes;
      s = env.mdp().start_state();
      episode_steps = 0;
    } else {
      s = st.next;
    }

    if (step % lc.update_period == 0) update();
    if (step % lc.target_sync == 0) target = online.sync_target();

    if (step % config.run.eval_period == 0 || step == config.run.total_steps) {
      EvalResult ev = evaluate(env, online, config.run.eval_episodes, config.run.eval_epsilon, eval_rng);
      MetricRow row;
      row.run = run_id;
      row.seed = seed;
      row.step = step;
      row.eval_return = ev.mean_return;
      row.mean_q = ev.mean_q;
      if (env.oracle_length()) row.rel_length = ev.mean_length / static_cast<double>(*env.oracle_length());
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      result.metrics.push_back(std::move(row));
    }
  }
  return result;
}

}  // namespace ebu
