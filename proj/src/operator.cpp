#include "ebu/operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "ebu/error.hpp"

namespace ebu {
namespace {

constexpr std::size_t kMaxPathsPerPair = 5'000'000;

void extend(const TabularMDP& mdp, std::size_t max_len, Path& prefix, PathSet& out) {
  StateId s = prefix.steps.back().state;
  if (mdp.is_terminal(s)) {
    Path done = prefix;
    done.terminal_reached = true;
    out.push_back(std::move(done));
    return;
  }
  for (ActionId a = 0; a < mdp.num_actions(); ++a) {
    prefix.steps.back().action = a;
    if (prefix.length() == max_len) {
      out.push_back(prefix);
    } else {
      prefix.steps.push_back({mdp.successor(s, a), kNoAction});
      extend(mdp, max_len, prefix, out);
      prefix.steps.pop_back();
    }
    if (out.size() > kMaxPathsPerPair) throw InvalidArgument("enumerate_paths: path set too large; lower max_len");
  }
  prefix.steps.back().action = kNoAction;
}

/// Largest Q(s, a') over a' != a; the sole value when there is one action.
double off_path_max(const QTable& q, StateId s, ActionId a) {
  auto row = q.row(s);
  if (row.size() == 1) return row[0];
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < row.size(); ++b)
    if (b != a) best = std::max(best, row[b]);
  return best;
}

double final_term(const TabularMDP& mdp, const QTable& q, const PathStep& step) {
  if (mdp.is_terminal(step.state)) return 0.0;
  return off_path_max(q, step.state, step.action);
}

}  // namespace

void Schedule::validate(std::size_t num_paths) const {
  if (weights.size() != num_paths) throw InvalidArgument("Schedule: weight count does not match path count");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidArgument("Schedule: weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument("Schedule: weights must sum to 1");
}

void OperatorConfig::validate() const {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("OperatorConfig: beta outside [0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("OperatorConfig: gamma outside [0, 1)");
  if (!(epsilon_trunc > 0.0)) throw InvalidArgument("OperatorConfig: epsilon_trunc must be positive");
}

PathSet enumerate_paths(const TabularMDP& mdp, StateId s, ActionId a, std::size_t max_len) {
  if (max_len < 1) throw InvalidArgument("enumerate_paths: max_len must be at least 1");
  PathSet out;
  Path prefix;
  prefix.steps = {{s, a}, {mdp.successor(s, a), kNoAction}};
  extend(mdp, max_len, prefix, out);
  return out;
}

double backward_return(const TabularMDP& mdp, const Path& path, const QTable& q, std::size_t j,
                       const OperatorConfig& config) {
  if (j < 1 || j > path.length()) throw InvalidArgument("backward_return: j out of range");
  const double decay = config.beta * config.gamma;
  double total = 0.0;
  double weight = 1.0;
  for (std::size_t k = 1; k < j; ++k) {
    const PathStep& st = path.steps[k];
    total += weight * (config.beta * mdp.reward(st.state, st.action) + (1.0 - config.beta) * q(st.state, st.action));
    weight *= decay;
  }
  return total + weight * final_term(mdp, q, path.steps[j]);
}

double max_backward_return(const TabularMDP& mdp, const Path& path, const QTable& q, const OperatorConfig& config) {
  const double decay = config.beta * config.gamma;
  double prefix = 0.0;
  double weight = 1.0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j <= path.length(); ++j) {
    const PathStep& st = path.steps[j];
    best = std::max(best, prefix + weight * final_term(mdp, q, st));
    if (st.action == kNoAction) break;
    prefix += weight * (config.beta * mdp.reward(st.state, st.action) + (1.0 - config.beta) * q(st.state, st.action));
    weight *= decay;
  }
  return best;
}

OperatorSchedules::OperatorSchedules(const TabularMDP& mdp, std::size_t max_len)
    : num_states_(mdp.num_states()),
      num_actions_(mdp.num_actions()),
      max_len_(max_len),
      paths_(num_states_ * num_actions_),
      schedules_(num_states_ * num_actions_) {
  for (StateId s = 0; s < num_states_; ++s) {
    if (mdp.is_terminal(s)) continue;
    for (ActionId a = 0; a < num_actions_; ++a) paths_[s * num_actions_ + a] = enumerate_paths(mdp, s, a, max_len);
  }
}

std::size_t OperatorSchedules::total_paths() const {
  std::size_t n = 0;
  for (const auto& p : paths_) n += p.size();
  return n;
}

bool OperatorSchedules::truncated() const {
  for (const auto& set : paths_)
    for (const auto& p : set)
      if (!p.terminal_reached) return true;
  return false;
}

OperatorSchedules OperatorSchedules::uniform(const TabularMDP& mdp, std::size_t max_len) {
  OperatorSchedules out(mdp, max_len);
  for (std::size_t i = 0; i < out.paths_.size(); ++i) {
    std::size_t n = out.paths_[i].size();
    out.schedules_[i].weights.assign(n, 1.0 / static_cast<double>(n));
  }
  return out;
}

namespace {

void normalize(std::vector<double>& w) {
  double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= sum;
}

}  // namespace

OperatorSchedules OperatorSchedules::random(const TabularMDP& mdp, std::size_t max_len, Rng& rng) {
  OperatorSchedules out(mdp, max_len);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (std::size_t i = 0; i < out.paths_.size(); ++i) {
    auto& w = out.schedules_[i].weights;
    w.resize(out.paths_[i].size());
    for (double& x : w) x = u(rng);
    if (!w.empty()) normalize(w);
  }
  return out;
}

OperatorSchedules OperatorSchedules::empirical(const TabularMDP& mdp, std::size_t max_len,
                                               const std::vector<Episode>& episodes, double pseudo_count) {
  if (!(pseudo_count > 0.0)) throw InvalidArgument("empirical schedule: pseudo_count must be positive");
  OperatorSchedules out(mdp, max_len);
  // Deterministic MDP: a path is identified by its query pair and its action sequence.
  std::vector<std::map<std::vector<ActionId>, std::size_t>> index(out.paths_.size());
  for (std::size_t i = 0; i < out.paths_.size(); ++i) {
    out.schedules_[i].weights.assign(out.paths_[i].size(), pseudo_count);
    for (std::size_t p = 0; p < out.paths_[i].size(); ++p) {
      std::vector<ActionId> key;
      for (std::size_t k = 1; k < out.paths_[i][p].steps.size(); ++k)
        if (out.paths_[i][p].steps[k].action != kNoAction) key.push_back(out.paths_[i][p].steps[k].action);
      index[i].emplace(std::move(key), p);
    }
  }
  for (const Episode& e : episodes) {
    for (std::size_t t = 0; t < e.size(); ++t) {
      std::size_t pair = e[t].s * out.num_actions_ + e[t].a;
      std::vector<ActionId> key;
      for (std::size_t k = t + 1; k < e.size() && key.size() < max_len; ++k) key.push_back(e[k].a);
      auto it = index[pair].find(key);
      if (it != index[pair].end()) out.schedules_[pair].weights[it->second] += 1.0;
    }
  }
  for (auto& s : out.schedules_)
    if (!s.weights.empty()) normalize(s.weights);
  return out;
}

QTable apply_operator(const TabularMDP& mdp, const QTable& q, const OperatorSchedules& schedules,
                      const OperatorConfig& config) {
  config.validate();
  if (q.num_states() != mdp.num_states() || q.num_actions() != mdp.num_actions() ||
      schedules.num_states() != mdp.num_states() || schedules.num_actions() != mdp.num_actions())
    throw InvalidArgument("apply_operator: shape mismatch");
  QTable out(mdp.num_states(), mdp.num_actions());
  for (StateId s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    for (ActionId a = 0; a < mdp.num_actions(); ++a) {
      const PathSet& paths = schedules.paths(s, a);
      const Schedule& sched = schedules.schedule(s, a);
      sched.validate(paths.size());
      double avg = 0.0;
      for (std::size_t i = 0; i < paths.size(); ++i)
        avg += sched.weights[i] * max_backward_return(mdp, paths[i], q, config);
      out(s, a) = mdp.reward(s, a) + config.gamma * avg;
    }
  }
  return out;
}

double contraction_ratio(const TabularMDP& mdp, const QTable& q1, const QTable& q2, const OperatorSchedules& schedules,
                         const OperatorConfig& config) {
  double denom = q1.distance(q2);
  if (denom == 0.0) throw InvalidArgument("contraction_ratio: q1 and q2 are identical");
  return apply_operator(mdp, q1, schedules, config).distance(apply_operator(mdp, q2, schedules, config)) / denom;
}

FixedPointResult fixed_point(const TabularMDP& mdp, const OperatorSchedules& schedules, const OperatorConfig& config,
                             double tol, long max_iters) {
  config.validate();
  if (!(tol > config.epsilon_trunc)) throw InvalidArgument("fixed_point: tol must exceed epsilon_trunc");
  // A change of tol*(1-gamma) bounds the distance to the operator's fixed point by gamma*tol.
  const double stop = config.gamma > 0.0 ? tol * (1.0 - config.gamma) : tol;
  FixedPointResult result{QTable(mdp.num_states(), mdp.num_actions()), 0, 0.0};
  for (long it = 1; it <= max_iters; ++it) {
    QTable next = apply_operator(mdp, result.q, schedules, config);
    result.last_change = next.distance(result.q);
    result.q = std::move(next);
    result.iterations = it;
    // With gamma = 0 the operator ignores Q, so one application is exact.
    if (config.gamma == 0.0 || result.last_change <= stop) return result;
  }
  throw ConvergenceError("fixed_point did not converge", result.last_change, max_iters);
}

std::size_t horizon_bound(double epsilon, double r_max, double gamma) {
  if (!(epsilon > 0.0)) throw InvalidArgument("horizon_bound: epsilon must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw InvalidArgument("horizon_bound: gamma outside [0, 1)");
  if (r_max < 0.0) throw InvalidArgument("horizon_bound: r_max must be non-negative");
  if (gamma == 0.0 || r_max == 0.0) return 1;
  double arg = epsilon * (1.0 - gamma) / r_max;
  if (arg >= 1.0) return 1;
  double n = std::ceil(std::log(arg) / std::log(gamma)) + 1.0;
  return static_cast<std::size_t>(std::max(1.0, n));
}

std::size_t certified_max_len(const OperatorConfig& config, double r_max) {
  return horizon_bound(config.epsilon_trunc / 2.0, r_max, config.gamma);
}

}  // namespace ebu
