#include "ebu/targets.hpp"

#include <algorithm>
#include <cmath>

#include "ebu/error.hpp"

namespace ebu {
namespace {

double max_of(const std::vector<double>& v) {
  if (v.empty()) throw InvalidArgument("target generation: empty action-value vector");
  return *std::max_element(v.begin(), v.end());
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0, 1]");
}

}  // namespace

ActionValueFn table_values(QTable q) {
  return [q = std::move(q)](StateId s) {
    auto r = q.row(s);
    return std::vector<double>(r.begin(), r.end());
  };
}

DiffusionCoefficient::DiffusionCoefficient(double beta) : beta_(beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("diffusion coefficient must lie in [0, 1]");
}

QTable tabular_ebu_update(QTable q, const Episode& episode, double gamma) {
  check_gamma(gamma);
  if (!episode.terminated()) throw InvalidArgument("tabular_ebu_update: episode must end in a terminal transition");
  for (std::size_t t = episode.size(); t-- > 0;) {
    const Transition& tr = episode[t];
    double future = tr.terminal ? 0.0 : q.max_value(tr.s_next);
    q(tr.s, tr.a) = tr.r + gamma * future;
  }
  return q;
}

BackwardTargetBatch ebu_targets(const Episode& episode, const ActionValueFn& target_q, DiffusionCoefficient beta,
                                double gamma) {
  check_gamma(gamma);
  const std::size_t T = episode.size();
  if (T == 0) throw InvalidArgument("ebu_targets: empty episode");
  BackwardTargetBatch batch;
  batch.beta = beta;
  batch.gamma = gamma;
  batch.q_tilde.reserve(T);
  for (const auto& tr : episode.transitions) batch.q_tilde.push_back(target_q(tr.s_next));
  batch.y.assign(T, 0.0);

  const Transition& last = episode[T - 1];
  batch.y[T - 1] = last.terminal ? last.r : last.r + gamma * max_of(batch.q_tilde[T - 1]);
  for (std::size_t k = T - 1; k-- > 0;) {
    auto& column = batch.q_tilde[k];
    double& entry = column.at(episode[k + 1].a);
    entry = beta * batch.y[k + 1] + (1.0 - beta) * entry;
    batch.y[k] = episode[k].r + gamma * max_of(column);
  }
  return batch;
}

double one_step_target(const Transition& t, const ActionValueFn& target_q, double gamma) {
  if (t.terminal) return t.r;
  return t.r + gamma * max_of(target_q(t.s_next));
}

std::vector<double> nstep_targets(const Episode& episode, const ActionValueFn& target_q, double gamma, std::size_t n) {
  check_gamma(gamma);
  if (n < 1) throw InvalidArgument("nstep_targets: n must be at least 1");
  const std::size_t T = episode.size();
  std::vector<double> y(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    std::size_t m = std::min(n, T - t);
    double ret = 0.0;
    double discount = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      ret += discount * episode[t + i].r;
      discount *= gamma;
    }
    const Transition& end = episode[t + m - 1];
    if (!end.terminal) ret += discount * max_of(target_q(end.s_next));
    y[t] = ret;
  }
  return y;
}

std::vector<double> retrace_coefficients(const Episode& episode, const RetraceConfig& config) {
  if (!(config.lambda >= 0.0 && config.lambda <= 1.0)) throw InvalidArgument("retrace: lambda outside [0, 1]");
  if (config.behavior_probs.size() != episode.size())
    throw InvalidArgument("retrace: behavior probabilities do not match episode length");
  if (!config.target_policy) throw InvalidArgument("retrace: missing target policy");
  std::vector<double> c(episode.size());
  for (std::size_t t = 0; t < episode.size(); ++t) {
    double mu = config.behavior_probs[t];
    if (!(mu > 0.0 && mu <= 1.0)) throw InvalidArgument("retrace: behavior probability must lie in (0, 1]");
    double pi = config.target_policy(episode[t].s).at(episode[t].a);
    c[t] = config.lambda * std::min(1.0, pi / mu);
  }
  return c;
}

std::vector<double> retrace_targets(const Episode& episode, const ActionValueFn& q, const RetraceConfig& config,
                                    double gamma) {
  check_gamma(gamma);
  const std::vector<double> c = retrace_coefficients(episode, config);
  const std::size_t T = episode.size();
  std::vector<double> delta_q(T, 0.0);
  double next_correction = 0.0;  // c_{t+1} * lambda * dQ_{t+1}, zero past the end
  for (std::size_t t = T; t-- > 0;) {
    const Transition& tr = episode[t];
    double expected = 0.0;
    if (!tr.terminal) {
      auto values = q(tr.s_next);
      auto pi = config.target_policy(tr.s_next);
      for (std::size_t a = 0; a < values.size(); ++a) expected += pi.at(a) * values[a];
    }
    double td = tr.r + gamma * expected - q(tr.s).at(tr.a);
    delta_q[t] = next_correction + td;
    next_correction = c[t] * config.lambda * delta_q[t];
  }
  return delta_q;
}

Policy epsilon_greedy_policy(ActionValueFn q, std::size_t num_actions, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("epsilon outside [0, 1]");
  return [q = std::move(q), num_actions, epsilon](StateId s) {
    auto values = q(s);
    std::vector<double> dist(num_actions, epsilon / static_cast<double>(num_actions));
    dist[argmax(values)] += 1.0 - epsilon;
    return dist;
  };
}

QTable watkins_q_lambda_update(QTable q, const Episode& episode, double lambda, double gamma, double alpha) {
  check_gamma(gamma);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("q_lambda: lambda outside [0, 1]");
  QTable trace(q.num_states(), q.num_actions());
  auto zero = [&trace] { std::fill(trace.values().begin(), trace.values().end(), 0.0); };
  for (const Transition& tr : episode.transitions) {
    bool greedy = q(tr.s, tr.a) >= q.max_value(tr.s);
    if (!greedy) zero();
    double future = tr.terminal ? 0.0 : q.max_value(tr.s_next);
    double td = tr.r + gamma * future - q(tr.s, tr.a);
    trace(tr.s, tr.a) += 1.0;
    auto values = q.values();
    auto e = trace.values();
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += alpha * td * e[i];
    if (greedy) {
      for (double& x : e) x *= gamma * lambda;
    } else {
      zero();
    }
  }
  return q;
}

}  // namespace ebu
