#include "ebu/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "ebu/error.hpp"

namespace ebu {

std::string to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kEbu: return "ebu";
    case LearnerKind::kOneStep: return "one-step";
    case LearnerKind::kNStep: return "n-step";
    case LearnerKind::kQLambda: return "q-lambda";
    case LearnerKind::kRetrace: return "retrace";
  }
  return "unknown";
}

LearnerKind parse_learner_kind(const std::string& name) {
  for (auto k : {LearnerKind::kEbu, LearnerKind::kOneStep, LearnerKind::kNStep, LearnerKind::kQLambda,
                 LearnerKind::kRetrace})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown learner '" + name + "'");
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  try {
    if (v.empty() || v[0] == '-') throw std::invalid_argument(v);
    std::size_t used = 0;
    auto x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::istringstream in(v);
  for (std::string tok; std::getline(in, tok, ',');) {
    tok = trim(tok);
    if (!tok.empty()) out.push_back(to_uint(key, tok));
  }
  return out;
}

std::string format_double(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

void RunConfig::set(const std::string& key, const std::string& v) {
  using Setter = std::function<void()>;
  const std::map<std::string, Setter> setters = {
      {"env.kind", [&] { env.kind = v; }},
      {"env.branching_n", [&] { env.branching_n = static_cast<int>(to_uint(key, v)); }},
      {"env.distractor_reward", [&] { env.distractor_reward = to_double(key, v); }},
      {"env.width", [&] { env.maze_width = static_cast<int>(to_uint(key, v)); }},
      {"env.height", [&] { env.maze_height = static_cast<int>(to_uint(key, v)); }},
      {"env.wall_density", [&] { env.wall_density = to_double(key, v); }},
      {"env.maze_seed", [&] { env.maze_seed = to_uint(key, v); }},
      {"env.maze_file", [&] { env.maze_file = v; }},
      {"env.observation", [&] { env.observation = v; }},
      {"env.mnist_images", [&] { env.mnist_images = v; }},
      {"env.mnist_labels", [&] { env.mnist_labels = v; }},
      {"env.max_steps", [&] { env.max_steps = to_uint(key, v); }},
      {"learner.kind", [&] { learner.kind = parse_learner_kind(v); }},
      {"learner.beta", [&] { learner.beta = to_double(key, v); }},
      {"learner.gamma", [&] { learner.gamma = to_double(key, v); }},
      {"learner.lambda", [&] { learner.lambda = to_double(key, v); }},
      {"learner.n", [&] { learner.n = to_uint(key, v); }},
      {"learner.batch_size", [&] { learner.batch_size = to_uint(key, v); }},
      {"learner.replay_capacity", [&] { learner.replay_capacity = to_uint(key, v); }},
      {"learner.update_period", [&] { learner.update_period = to_uint(key, v); }},
      {"learner.target_sync", [&] { learner.target_sync = to_uint(key, v); }},
      {"learner.lr", [&] { learner.lr = to_double(key, v); }},
      {"learner.episode_sampling", [&] { learner.episode_sampling = v; }},
      {"approx.kind", [&] { approx.kind = v; }},
      {"approx.hidden", [&] { approx.hidden = to_sizes(key, v); }},
      {"run.name", [&] { run.name = v; }},
      {"run.total_steps", [&] { run.total_steps = to_uint(key, v); }},
      {"run.eval_period", [&] { run.eval_period = to_uint(key, v); }},
      {"run.eval_episodes", [&] { run.eval_episodes = to_uint(key, v); }},
      {"run.eval_epsilon", [&] { run.eval_epsilon = to_double(key, v); }},
      {"run.epsilon_start", [&] { run.epsilon_start = to_double(key, v); }},
      {"run.epsilon_end", [&] { run.epsilon_end = to_double(key, v); }},
      {"run.epsilon_anneal", [&] { run.epsilon_anneal = to_uint(key, v); }},
      {"run.epsilon_shape",
       [&] {
         if (v == "linear")
           run.epsilon_shape = EpsilonShape::kLinear;
         else if (v == "quadratic")
           run.epsilon_shape = EpsilonShape::kQuadratic;
         else
           throw ConfigError(key + ": expected linear or quadratic");
       }},
      {"run.seeds", [&] { run.seeds = to_uint(key, v); }},
      {"run.seed", [&] { run.seed = to_uint(key, v); }},
      {"run.threads", [&] { run.threads = to_uint(key, v); }},
      {"run.output", [&] { run.output = v; }},
  };
  auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second();
}

std::string RunConfig::to_text() const {
  std::ostringstream out;
  out << "env.kind = " << env.kind << '\n'
      << "env.branching_n = " << env.branching_n << '\n'
      << "env.distractor_reward = " << format_double(env.distractor_reward) << '\n'
      << "env.width = " << env.maze_width << '\n'
      << "env.height = " << env.maze_height << '\n'
      << "env.wall_density = " << format_double(env.wall_density) << '\n'
      << "env.maze_seed = " << env.maze_seed << '\n';
  if (!env.maze_file.empty()) out << "env.maze_file = " << env.maze_file << '\n';
  out << "env.observation = " << env.observation << '\n';
  if (!env.mnist_images.empty()) out << "env.mnist_images = " << env.mnist_images << '\n';
  if (!env.mnist_labels.empty()) out << "env.mnist_labels = " << env.mnist_labels << '\n';
  out << "env.max_steps = " << env.max_steps << '\n'
      << "learner.kind = " << to_string(learner.kind) << '\n'
      << "learner.beta = " << format_double(learner.beta) << '\n'
      << "learner.gamma = " << format_double(learner.gamma) << '\n'
      << "learner.lambda = " << format_double(learner.lambda) << '\n'
      << "learner.n = " << learner.n << '\n'
      << "learner.batch_size = " << learner.batch_size << '\n'
      << "learner.replay_capacity = " << learner.replay_capacity << '\n'
      << "learner.update_period = " << learner.update_period << '\n'
      << "learner.target_sync = " << learner.target_sync << '\n'
      << "learner.lr = " << format_double(learner.lr) << '\n'
      << "learner.episode_sampling = " << learner.episode_sampling << '\n'
      << "approx.kind = " << approx.kind << '\n'
      << "approx.hidden = ";
  for (std::size_t i = 0; i < approx.hidden.size(); ++i) out << (i ? "," : "") << approx.hidden[i];
  out << '\n'
      << "run.name = " << run.name << '\n'
      << "run.total_steps = " << run.total_steps << '\n'
      << "run.eval_period = " << run.eval_period << '\n'
      << "run.eval_episodes = " << run.eval_episodes << '\n'
      << "run.eval_epsilon = " << format_double(run.eval_epsilon) << '\n'
      << "run.epsilon_start = " << format_double(run.epsilon_start) << '\n'
      << "run.epsilon_end = " << format_double(run.epsilon_end) << '\n'
      << "run.epsilon_anneal = " << run.epsilon_anneal << '\n'
      << "run.epsilon_shape = " << (run.epsilon_shape == EpsilonShape::kLinear ? "linear" : "quadratic") << '\n'
      << "run.seeds = " << run.seeds << '\n'
      << "run.seed = " << run.seed << '\n'
      << "run.threads = " << run.threads << '\n';
  if (!run.output.empty()) out << "run.output = " << run.output << '\n';
  return out.str();
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  require(env.kind == "chain" || env.kind == "branching" || env.kind == "maze",
          "env.kind must be chain, branching or maze");
  require(env.branching_n >= 1, "env.branching_n must be at least 1");
  require(env.maze_width >= 2 && env.maze_height >= 2, "maze dimensions must be at least 2");
  require(env.wall_density >= 0.0 && env.wall_density < 1.0, "env.wall_density must lie in [0, 1)");
  require(env.observation == "coords" || env.observation == "mnist", "env.observation must be coords or mnist");
  if (env.observation == "mnist") {
    require(env.kind == "maze", "mnist observations need env.kind = maze");
    require(!env.mnist_images.empty() && !env.mnist_labels.empty(), "mnist observations need image and label files");
    require(approx.kind != "tabular", "mnist observations need a linear or dense approximator");
    require(env.maze_width <= 10 && env.maze_height <= 10, "mnist observations need coordinates below 10");
  }
  require(unit(learner.beta), "learner.beta must lie in [0, 1]");
  require(unit(learner.gamma), "learner.gamma must lie in [0, 1]");
  require(learner.gamma < 1.0 || env.kind == "branching", "learner.gamma = 1 is only allowed on the branching domain");
  require(unit(learner.lambda), "learner.lambda must lie in [0, 1]");
  require(learner.batch_size >= 1, "learner.batch_size must be positive");
  require(learner.replay_capacity >= 1, "learner.replay_capacity must be positive");
  require(learner.update_period >= 1, "learner.update_period must be positive");
  require(learner.target_sync >= 1, "learner.target_sync must be positive");
  require(learner.lr > 0.0, "learner.lr must be positive");
  require(learner.episode_sampling == "uniform" || learner.episode_sampling == "length",
          "learner.episode_sampling must be uniform or length");
  require(approx.kind == "tabular" || approx.kind == "linear" || approx.kind == "dense",
          "approx.kind must be tabular, linear or dense");
  require(learner.kind != LearnerKind::kQLambda || approx.kind == "tabular", "q-lambda needs approx.kind = tabular");
  for (auto h : approx.hidden) require(h >= 1, "approx.hidden sizes must be positive");
  require(run.total_steps >= 1, "run.total_steps must be positive");
  require(run.eval_period >= 1, "run.eval_period must be positive");
  require(run.eval_episodes >= 1, "run.eval_episodes must be positive");
  require(unit(run.eval_epsilon), "run.eval_epsilon must lie in [0, 1]");
  require(unit(run.epsilon_start) && unit(run.epsilon_end), "epsilon schedule endpoints must lie in [0, 1]");
  require(run.seeds >= 1, "run.seeds must be positive");
  require(run.threads >= 1, "run.threads must be positive");
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  for (const auto& [key, value] : parse_key_values(text)) config.set(key, value);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

double epsilon_at(const RunSettings& run, std::size_t step) {
  const std::size_t horizon = run.epsilon_anneal ? run.epsilon_anneal : run.total_steps;
  if (step >= horizon) return run.epsilon_end;
  double remaining = static_cast<double>(horizon - step) / static_cast<double>(horizon);
  if (run.epsilon_shape == EpsilonShape::kQuadratic) remaining *= remaining;
  return run.epsilon_end + (run.epsilon_start - run.epsilon_end) * remaining;
}

}  // namespace ebu
