#include "ebu/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "ebu/environments.hpp"
#include "ebu/error.hpp"

namespace ebu {
namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& field, const std::string& line) {
  try {
    std::size_t used = 0;
    double v = std::stod(field, &used);
    if (used != field.size()) throw FormatError("bad number in CSV line: " + line);
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad number in CSV line: " + line);
  }
}

std::uint64_t parse_uint(const std::string& field, const std::string& line) {
  if (field.empty() || field.find_first_not_of("0123456789") != std::string::npos)
    throw FormatError("bad integer in CSV line: " + line);
  return std::stoull(field);
}

/// Runs jobs 0..count-1 on up to `threads` workers. Each job writes only its own slot.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) job(i);
      } catch (...) {
        errors[w] = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void sort_rows(std::vector<MetricRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
    if (a.step != b.step) return a.step < b.step;
    return a.seed < b.seed;
  });
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double relative_length(double agent_len, double oracle_len) {
  if (!(oracle_len > 0.0)) throw InvalidArgument("relative_length: oracle length must be positive");
  return agent_len / oracle_len;
}

double relative_score(double agent, double baseline, double human, double random) {
  double denom = std::max(human, baseline) - random;
  if (denom == 0.0) throw InvalidArgument("relative_score: zero denominator");
  return (agent - baseline) / denom;
}

double human_normalized_score(double agent, double human, double random) {
  double denom = std::abs(human - random);
  if (denom == 0.0) throw InvalidArgument("human_normalized_score: human and random scores coincide");
  return (agent - random) / denom;
}

double mean_q_diagnostic(const std::vector<Episode>& episodes, const ActionValueFn& q) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : episodes)
    for (const auto& t : e.transitions) {
      sum += q(t.s)[t.a];
      ++n;
    }
  if (n == 0) throw InvalidArgument("mean_q_diagnostic: no transitions");
  return sum / static_cast<double>(n);
}

std::string to_csv_line(const MetricRow& row) {
  if (row.run.find_first_of(",\n\"") != std::string::npos)
    throw InvalidArgument("run id must not contain commas, quotes or newlines");
  std::string out = row.run + ',' + std::to_string(row.seed) + ',' + std::to_string(row.step) + ',' +
                    format_double(row.eval_return) + ',';
  if (row.rel_length) out += format_double(*row.rel_length);
  out += ',' + format_double(row.mean_q) + ',' + format_double(row.seconds);
  return out;
}

MetricRow parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  if (fields.size() != 7) throw FormatError("CSV line needs 7 fields: " + line);
  MetricRow row;
  row.run = fields[0];
  row.seed = parse_uint(fields[1], line);
  row.step = parse_uint(fields[2], line);
  row.eval_return = parse_double(fields[3], line);
  if (!fields[4].empty()) row.rel_length = parse_double(fields[4], line);
  row.mean_q = parse_double(fields[5], line);
  row.seconds = parse_double(fields[6], line);
  return row;
}

void write_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << to_csv_line(r) << '\n';
}

ExperimentResult run_experiment(const RunConfig& config) {
  config.validate();
  ExperimentResult result;
  result.runs.resize(config.run.seeds);
  parallel_for(config.run.seeds, config.run.threads, [&](std::size_t i) {
    std::uint64_t seed = config.run.seed + i;
    result.runs[i] = train(config, seed, config.run.name + "-s" + std::to_string(seed));
  });
  for (const auto& r : result.runs) result.rows.insert(result.rows.end(), r.metrics.begin(), r.metrics.end());
  sort_rows(result.rows);
  return result;
}

// ---- chain figure ----------------------------------------------------------

bool chain_policy_optimal(const QTable& q) {
  for (StateId s = 0; s < 3; ++s)
    if (q.greedy_action(s) != chain::kRight) return false;
  return true;
}

namespace {

void overwrite(QTable& q, const TabularMDP& mdp, const Transition& t) {
  q(t.s, t.a) = t.r + (t.terminal ? 0.0 : mdp.gamma() * q.max_value(t.s_next));
}

}  // namespace

Fig1Curve fig1_probability_curve(std::size_t num_updates_max, std::size_t trials, Rng& rng) {
  if (trials == 0) throw InvalidArgument("fig1_probability_curve: trials must be positive");
  const TabularMDP mdp = make_chain(0.9);
  const Episode episode = chain_revisit_episode();
  const std::size_t len = episode.size();

  Fig1Curve curve;
  curve.updates.resize(num_updates_max);
  curve.ebu.assign(num_updates_max, 0.0);
  curve.uniform.assign(num_updates_max, 0.0);
  for (std::size_t k = 0; k < num_updates_max; ++k) curve.updates[k] = k + 1;

  // The backward replay is deterministic: one trial gives the exact curve.
  QTable q(mdp.num_states(), mdp.num_actions());
  for (std::size_t k = 0; k < num_updates_max; ++k) {
    overwrite(q, mdp, episode[len - 1 - k % len]);
    curve.ebu[k] = chain_policy_optimal(q) ? 1.0 : 0.0;
  }

  std::uniform_int_distribution<std::size_t> pick(0, len - 1);
  std::vector<std::size_t> hits(num_updates_max, 0);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    QTable u(mdp.num_states(), mdp.num_actions());
    for (std::size_t k = 0; k < num_updates_max; ++k) {
      overwrite(u, mdp, episode[pick(rng)]);
      if (chain_policy_optimal(u)) ++hits[k];
    }
  }
  for (std::size_t k = 0; k < num_updates_max; ++k)
    curve.uniform[k] = static_cast<double>(hits[k]) / static_cast<double>(trials);
  return curve;
}

// ---- operator verification -------------------------------------------------

TabularMDP random_mdp(std::size_t num_states, std::size_t num_actions, std::size_t num_terminal, double gamma,
                      Rng& rng) {
  if (num_states < 1 || num_actions < 1 || num_terminal >= num_states)
    throw InvalidArgument("random_mdp: need at least one non-terminal state");
  TabularMDP mdp(num_states, num_actions, gamma);
  std::uniform_int_distribution<StateId> next(0, static_cast<StateId>(num_states - 1));
  std::uniform_real_distribution<double> reward(-1.0, 1.0);
  const std::size_t first_terminal = num_states - num_terminal;
  for (StateId s = 0; s < first_terminal; ++s)
    for (ActionId a = 0; a < num_actions; ++a) mdp.set_transition(s, a, next(rng), reward(rng));
  for (std::size_t s = first_terminal; s < num_states; ++s) mdp.set_terminal(static_cast<StateId>(s));
  return mdp;
}

OperatorReport verify_operator(const OperatorCheckSettings& settings, Rng& rng) {
  OperatorReport report;
  const double gammas[] = {0.5, 0.9, 0.99};
  const double betas[] = {0.0, 0.3, 0.5, 1.0};
  std::uniform_int_distribution<std::size_t> states(2, 6);
  std::uniform_int_distribution<std::size_t> actions(2, 3);
  std::uniform_int_distribution<std::size_t> pick_gamma(0, 2);
  std::uniform_int_distribution<std::size_t> pick_beta(0, 3);
  std::uniform_real_distribution<double> value(-5.0, 5.0);

  for (std::size_t d = 0; d < settings.contraction_draws; ++d) {
    std::size_t ns = states(rng);
    std::size_t na = actions(rng);
    std::uniform_int_distribution<std::size_t> terminals(0, ns - 1);
    OperatorConfig cfg;
    cfg.gamma = gammas[pick_gamma(rng)];
    cfg.beta = betas[pick_beta(rng)];
    TabularMDP mdp = random_mdp(ns, na, terminals(rng), cfg.gamma, rng);
    auto schedules = OperatorSchedules::random(mdp, settings.contraction_max_len, rng);
    QTable q1(ns, na), q2(ns, na);
    for (double& x : q1.values()) x = value(rng);
    for (double& x : q2.values()) x = value(rng);
    double ratio = contraction_ratio(mdp, q1, q2, schedules, cfg);
    ++report.contraction_draws;
    report.worst_ratio = std::max(report.worst_ratio, ratio);
    report.worst_ratio_minus_gamma = std::max(report.worst_ratio_minus_gamma, ratio - cfg.gamma);
    if (ratio > cfg.gamma + 1e-9) ++report.contraction_failures;
  }

  OperatorConfig fp;
  fp.gamma = settings.fixed_point_gamma;
  fp.epsilon_trunc = settings.fixed_point_epsilon_trunc;
  for (std::size_t d = 0; d < settings.fixed_point_draws; ++d) {
    std::size_t ns = states(rng);
    std::uniform_int_distribution<std::size_t> terminals(0, ns - 1);
    fp.beta = betas[pick_beta(rng)];
    TabularMDP mdp = random_mdp(ns, actions(rng), terminals(rng), fp.gamma, rng);
    QTable q_star = value_iteration(mdp, 1e-12);
    std::size_t max_len = certified_max_len(fp, mdp.max_abs_reward());
    const double bound = settings.fixed_point_tol + fp.epsilon_trunc / (1.0 - fp.gamma);
    for (int rep = 0; rep < 2; ++rep) {
      auto schedules = OperatorSchedules::random(mdp, max_len, rng);
      auto result = fixed_point(mdp, schedules, fp, settings.fixed_point_tol);
      double err = result.q.distance(q_star);
      ++report.fixed_point_draws;
      report.worst_fixed_point_slack = std::max(report.worst_fixed_point_slack, err - bound);
      if (err > bound) ++report.fixed_point_failures;
    }
  }
  return report;
}

void print_operator_report(std::ostream& out, const OperatorReport& report) {
  out << "contraction_draws=" << report.contraction_draws << '\n'
      << "contraction_failures=" << report.contraction_failures << '\n'
      << "worst_ratio=" << format_double(report.worst_ratio) << '\n'
      << "worst_ratio_minus_gamma=" << format_double(report.worst_ratio_minus_gamma) << '\n'
      << "fixed_point_checks=" << report.fixed_point_draws << '\n'
      << "fixed_point_failures=" << report.fixed_point_failures << '\n'
      << "worst_fixed_point_slack=" << format_double(report.worst_fixed_point_slack) << '\n'
      << "result=" << (report.passed() ? "PASS" : "FAIL") << '\n';
}

// ---- maze benchmark --------------------------------------------------------

namespace {

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto b = item.find_first_not_of(" \t");
    auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("empty list item in '" + v + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::logic_error&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

std::size_t to_count(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return std::stoull(v);
}

}  // namespace

std::pair<RunConfig, MazeBenchSettings> parse_maze_bench(const std::string& text) {
  RunConfig config;
  config.env.kind = "maze";
  MazeBenchSettings bench;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key.rfind("bench.", 0) != 0) {
      config.set(key, value);
      continue;
    }
    if (key == "bench.densities") {
      bench.densities.clear();
      for (const auto& d : split_list(value)) bench.densities.push_back(to_double(key, d));
    } else if (key == "bench.mazes") {
      bench.mazes = to_count(key, value);
    } else if (key == "bench.seeds") {
      bench.seeds = to_count(key, value);
    } else if (key == "bench.learners") {
      bench.learners.clear();
      for (const auto& l : split_list(value)) bench.learners.push_back(parse_learner_kind(l));
    } else if (key == "bench.ebu_beta") {
      bench.ebu_beta = to_double(key, value);
    } else if (key == "bench.compare_beta") {
      bench.compare_beta = to_double(key, value);
    } else if (key == "bench.compare_mean_q") {
      if (value != "true" && value != "false") throw ConfigError("bench.compare_mean_q must be true or false");
      bench.compare_mean_q = value == "true";
    } else {
      throw ConfigError("unknown key " + key);
    }
  }
  if (bench.mazes == 0 || bench.seeds == 0) throw ConfigError("bench.mazes and bench.seeds must be positive");
  for (double d : bench.densities)
    if (!(d >= 0.0 && d < 1.0)) throw ConfigError("bench.densities must lie in [0, 1)");
  if (config.env.kind != "maze") throw ConfigError("maze-bench needs env.kind = maze");
  config.validate();
  return {config, bench};
}

double MazeBenchResult::median(double density, const std::string& learner) const {
  for (const auto& c : cells)
    if (c.density == density && c.learner == learner) return c.median_rel_length;
  throw InvalidArgument("no benchmark cell for " + learner);
}

MazeBenchResult run_maze_bench(const RunConfig& base, const MazeBenchSettings& settings) {
  const auto started = std::chrono::steady_clock::now();
  struct Job {
    std::size_t cell;  // index into cells, or npos for the mean-Q comparison run
    std::size_t density;
    std::size_t maze;
    std::size_t seed;
    LearnerKind learner;
    double beta;
  };
  MazeBenchResult result;
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < settings.densities.size(); ++d) {
    for (LearnerKind l : settings.learners) {
      result.cells.push_back({settings.densities[d], to_string(l), {}, 0.0});
      for (std::size_t m = 0; m < settings.mazes; ++m)
        for (std::size_t s = 0; s < settings.seeds; ++s)
          jobs.push_back({result.cells.size() - 1, d, m, s, l,
                          l == LearnerKind::kEbu ? settings.ebu_beta : base.learner.beta});
    }
    if (settings.compare_mean_q)
      for (std::size_t m = 0; m < settings.mazes; ++m)
        for (std::size_t s = 0; s < settings.seeds; ++s)
          jobs.push_back({std::string::npos, d, m, s, LearnerKind::kEbu, settings.compare_beta});
  }

  std::vector<RunResult> runs(jobs.size());
  std::vector<std::string> ids(jobs.size());
  parallel_for(jobs.size(), base.run.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    RunConfig cfg = base;
    cfg.env.kind = "maze";
    cfg.env.wall_density = settings.densities[job.density];
    cfg.env.maze_seed = base.env.maze_seed + 1000 * job.density + job.maze;
    cfg.learner.kind = job.learner;
    cfg.learner.beta = job.beta;
    std::ostringstream id;
    id << "d" << settings.densities[job.density] << "-m" << job.maze << '-' << to_string(job.learner);
    if (job.learner == LearnerKind::kEbu) id << "-b" << job.beta;
    ids[i] = id.str();
    runs[i] = train(cfg, base.run.seed + job.seed, ids[i]);
  });

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    result.rows.insert(result.rows.end(), runs[i].metrics.begin(), runs[i].metrics.end());
    if (jobs[i].cell != std::string::npos && !runs[i].metrics.empty())
      result.cells[jobs[i].cell].final_rel_lengths.push_back(runs[i].metrics.back().rel_length.value_or(NAN));
  }
  for (auto& c : result.cells) c.median_rel_length = median_of(c.final_rel_lengths);

  if (settings.compare_mean_q) {
    // Pair each comparison run with the main EBU run on the same maze and seed.
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].cell != std::string::npos) continue;
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].cell == std::string::npos || jobs[j].learner != LearnerKind::kEbu) continue;
        if (jobs[j].density != jobs[i].density || jobs[j].maze != jobs[i].maze || jobs[j].seed != jobs[i].seed)
          continue;
        const auto& hi = runs[j].metrics;
        const auto& lo = runs[i].metrics;
        for (std::size_t k = 0; k < std::min(hi.size(), lo.size()); ++k) {
          ++result.mean_q_checkpoints;
          if (hi[k].mean_q > lo[k].mean_q) ++result.mean_q_higher;
        }
      }
    }
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

void print_maze_bench(std::ostream& out, const MazeBenchResult& result) {
  out << "density,learner,median_rel_length,runs\n";
  for (const auto& c : result.cells)
    out << c.density << ',' << c.learner << ',' << std::fixed << std::setprecision(4) << c.median_rel_length
        << std::defaultfloat << ',' << c.final_rel_lengths.size() << '\n';
  if (result.mean_q_checkpoints > 0)
    out << "mean_q_high_beta_above_low_beta=" << result.mean_q_higher << '/' << result.mean_q_checkpoints << '\n';
  out << "seconds=" << std::fixed << std::setprecision(1) << result.seconds << std::defaultfloat << '\n';
}

}  // namespace ebu
