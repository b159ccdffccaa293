#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "ebu/environments.hpp"
#include "ebu/error.hpp"
#include "ebu/harness.hpp"
#include "test_util.hpp"

using namespace ebu;

namespace {

// Exact uniform-sampling curve: propagate the distribution over Q tables reachable by
// k overwrite updates, each transition drawn with probability 1/5.
std::vector<double> exact_uniform_curve(std::size_t max_updates) {
  const Episode e = chain_revisit_episode();
  using Table = std::vector<double>;  // (s, a) -> value, 4 states x 2 actions
  auto at = [](const Table& t, StateId s, ActionId a) { return t[s * 2 + a]; };
  auto optimal = [&](const Table& t) {
    for (StateId s = 0; s < 3; ++s)
      if (!(at(t, s, chain::kRight) > at(t, s, chain::kLeft))) return false;
    return true;
  };
  std::map<Table, double> dist{{Table(8, 0.0), 1.0}};
  std::vector<double> curve;
  for (std::size_t k = 0; k < max_updates; ++k) {
    std::map<Table, double> next;
    for (const auto& [table, p] : dist)
      for (const auto& t : e.transitions) {
        Table u = table;
        double boot = t.terminal ? 0.0 : 0.9 * std::max(at(u, t.s_next, 0), at(u, t.s_next, 1));
        u[t.s * 2 + t.a] = t.r + boot;
        next[u] += p / 5.0;
      }
    dist = std::move(next);
    double prob = 0.0;
    for (const auto& [table, p] : dist)
      if (optimal(table)) prob += p;
    curve.push_back(prob);
  }
  return curve;
}

}  // namespace

TEST(Metrics, WorkedValues) {
  EXPECT_DOUBLE_EQ(relative_length(36, 18), 2.0);
  EXPECT_THROW(relative_length(10, 0), InvalidArgument);
  // (150 - 100) / (max(120, 100) - 20)
  EXPECT_DOUBLE_EQ(relative_score(150, 100, 120, 20), 0.5);
  EXPECT_DOUBLE_EQ(relative_score(150, 130, 120, 20), 20.0 / 110.0);
  EXPECT_THROW(relative_score(1, 5, 5, 5), InvalidArgument);
  EXPECT_DOUBLE_EQ(human_normalized_score(60, 110, 10), 0.5);
  EXPECT_DOUBLE_EQ(human_normalized_score(-10, -30, 10), -0.5);
  EXPECT_THROW(human_normalized_score(1, 2, 2), InvalidArgument);
}

TEST(Metrics, MeanQOverAllTransitions) {
  QTable q(4, 2);
  q(0, chain::kRight) = 1.0;
  q(1, chain::kRight) = 2.0;
  q(2, chain::kLeft) = 4.0;
  q(2, chain::kRight) = 8.0;
  std::vector<Episode> eps{chain_revisit_episode()};
  // Pairs visited: (0,R), (1,R), (2,L), (1,R), (2,R).
  EXPECT_DOUBLE_EQ(mean_q_diagnostic(eps, table_values(q)), (1 + 2 + 4 + 2 + 8) / 5.0);
  EXPECT_THROW(mean_q_diagnostic({}, table_values(q)), InvalidArgument);
}

TEST(Csv, RoundTripIsBitExact) {
  Rng rng(11);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 200; ++i) {
    MetricRow row{"run-" + std::to_string(i), static_cast<std::uint64_t>(i) * 7919u, static_cast<std::size_t>(i), u(rng),
                  std::nullopt, u(rng) / 3.0, std::abs(u(rng))};
    if (i % 2) row.rel_length = u(rng) / 7.0;
    MetricRow back = parse_csv_line(to_csv_line(row));
    ASSERT_EQ(back.run, row.run);
    ASSERT_EQ(back.seed, row.seed);
    ASSERT_EQ(back.step, row.step);
    ASSERT_EQ(back.eval_return, row.eval_return);
    ASSERT_EQ(back.rel_length, row.rel_length);
    ASSERT_EQ(back.mean_q, row.mean_q);
    ASSERT_EQ(back.seconds, row.seconds);
  }
}

TEST(Csv, HeaderAndMalformedLines) {
  std::ostringstream out;
  write_csv(out, {MetricRow{"a", 1, 2, 3.5, 1.25, 0.5, 0.0}});
  EXPECT_EQ(out.str(), std::string(kCsvHeader) + "\na,1,2,3.5,1.25,0.5,0\n");
  EXPECT_THROW(parse_csv_line("a,1,2,3"), FormatError);
  EXPECT_THROW(parse_csv_line("a,x,2,3,,0,0"), FormatError);
  EXPECT_THROW(parse_csv_line("a,1,2,3,,zero,0"), FormatError);
  EXPECT_THROW(to_csv_line(MetricRow{"bad,id"}), InvalidArgument);
}

TEST(Fig1, EbuCurveIsAStepAtFiveUpdates) {
  Rng rng(1);
  auto c = fig1_probability_curve(12, 10, rng);
  for (std::size_t k = 0; k < 12; ++k) EXPECT_EQ(c.ebu[k], c.updates[k] >= 5 ? 1.0 : 0.0) << c.updates[k];
}

TEST(Fig1, UniformCurveMatchesExactDistribution) {
  Rng rng(2);
  const std::size_t trials = 20000;
  auto c = fig1_probability_curve(40, trials, rng);
  auto exact = exact_uniform_curve(40);
  for (std::size_t k = 0; k < 40; ++k) {
    double sigma = std::sqrt(exact[k] * (1 - exact[k]) / trials);
    ASSERT_NEAR(c.uniform[k], exact[k], 5 * sigma + 1e-9) << "k=" << k + 1;
  }
  // Fewer than three updates can never reach s1's right action with a positive value.
  EXPECT_EQ(exact[1], 0.0);
}

TEST(Fig1, ChainPolicyCheck) {
  QTable q = value_iteration(make_chain());
  EXPECT_TRUE(chain_policy_optimal(q));
  q(0, chain::kLeft) = q(0, chain::kRight);
  EXPECT_FALSE(chain_policy_optimal(q));  // ties go to the lower index
}

TEST(RandomMdp, LayoutAndRanges) {
  Rng rng(3);
  TabularMDP m = random_mdp(6, 3, 2, 0.9, rng);
  EXPECT_TRUE(m.is_terminal(4));
  EXPECT_TRUE(m.is_terminal(5));
  EXPECT_FALSE(m.is_terminal(3));
  EXPECT_LE(m.max_abs_reward(), 1.0);
  EXPECT_THROW(random_mdp(2, 2, 2, 0.9, rng), InvalidArgument);
}

TEST(VerifyOperator, SmallRunPassesAndPrints) {
  Rng rng(4);
  OperatorCheckSettings s;
  s.contraction_draws = 10;
  s.fixed_point_draws = 2;
  auto report = verify_operator(s, rng);
  EXPECT_TRUE(report.passed());
  EXPECT_EQ(report.contraction_draws, 10u);
  EXPECT_EQ(report.fixed_point_draws, 4u);  // two schedules per MDP
  EXPECT_LE(report.worst_ratio_minus_gamma, 1e-9);
  std::ostringstream out;
  print_operator_report(out, report);
  EXPECT_NE(out.str().find("result=PASS"), std::string::npos);
}

TEST(MazeBench, ParsesBenchKeys) {
  auto [config, bench] = parse_maze_bench(
      "env.kind = maze\n"
      "learner.lr = 1\n"
      "bench.densities = 0.1, 0.5\n"
      "bench.mazes = 2\n"
      "bench.learners = ebu, n-step\n"
      "bench.compare_mean_q = false\n");
  EXPECT_EQ(config.env.kind, "maze");
  EXPECT_EQ(bench.densities, (std::vector<double>{0.1, 0.5}));
  EXPECT_EQ(bench.mazes, 2u);
  EXPECT_EQ(bench.learners, (std::vector<LearnerKind>{LearnerKind::kEbu, LearnerKind::kNStep}));
  EXPECT_FALSE(bench.compare_mean_q);
  EXPECT_THROW(parse_maze_bench("bench.colour = 1\n"), ConfigError);
  EXPECT_THROW(parse_maze_bench("bench.mazes = many\n"), ConfigError);
}

TEST(MazeBench, TinyBenchProducesEveryCell) {
  auto [config, bench] = parse_maze_bench(
      "env.kind = maze\nenv.width = 4\nenv.height = 4\nlearner.lr = 1\nlearner.update_period = 5\n"
      "learner.target_sync = 50\nrun.total_steps = 400\nrun.eval_period = 200\nrun.eval_episodes = 1\n"
      "run.eval_epsilon = 0\nbench.densities = 0.2\nbench.mazes = 2\nbench.seeds = 1\n");
  auto result = run_maze_bench(config, bench);
  ASSERT_EQ(result.cells.size(), 3u);
  for (const auto& cell : result.cells) {
    EXPECT_EQ(cell.final_rel_lengths.size(), 2u);
    EXPECT_GE(cell.median_rel_length, 1.0);
  }
  EXPECT_EQ(result.mean_q_checkpoints, 2u * 2u);
  EXPECT_THROW(result.median(0.9, "ebu"), InvalidArgument);
  std::ostringstream out;
  print_maze_bench(out, result);
  EXPECT_NE(out.str().find("one-step"), std::string::npos);
}

TEST(Experiment, SeedsAreMergedInStepOrder) {
  RunConfig c = parse_config(
      "env.kind = chain\nlearner.kind = one-step\nlearner.lr = 1\nrun.total_steps = 200\nrun.eval_period = 100\n"
      "run.eval_episodes = 1\nrun.seeds = 3\nrun.seed = 5\nrun.name = x\n");
  auto r = run_experiment(c);
  ASSERT_EQ(r.runs.size(), 3u);
  ASSERT_EQ(r.rows.size(), 6u);
  EXPECT_EQ(r.rows[0].run, "x-s5");
  EXPECT_EQ(r.rows[1].run, "x-s6");
  EXPECT_EQ(r.rows[2].run, "x-s7");
  EXPECT_EQ(r.rows[3].step, 200u);
}
