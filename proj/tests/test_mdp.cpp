#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "ebu/environments.hpp"
#include "ebu/error.hpp"
#include "ebu/harness.hpp"
#include "ebu/mdp.hpp"
#include "test_util.hpp"

using namespace ebu;

namespace {

// Value of a fixed deterministic policy by plain repeated evaluation.
std::vector<double> policy_value(const TabularMDP& mdp, const std::vector<ActionId>& pi) {
  std::vector<double> v(mdp.num_states(), 0.0);
  for (int it = 0; it < 4000; ++it) {
    std::vector<double> next(mdp.num_states(), 0.0);
    for (StateId s = 0; s < mdp.num_states(); ++s) {
      if (mdp.is_terminal(s)) continue;
      next[s] = mdp.reward(s, pi[s]) + mdp.gamma() * v[mdp.successor(s, pi[s])];
    }
    v = next;
  }
  return v;
}

// Q* by enumerating every deterministic policy: V*(s) = max_pi V^pi(s).
QTable brute_force_q_star(const TabularMDP& mdp) {
  std::size_t ns = mdp.num_states(), na = mdp.num_actions();
  std::vector<double> v_star(ns, -1e300);
  std::vector<ActionId> pi(ns, 0);
  while (true) {
    auto v = policy_value(mdp, pi);
    for (std::size_t s = 0; s < ns; ++s) v_star[s] = std::max(v_star[s], v[s]);
    std::size_t i = 0;
    while (i < ns && ++pi[i] == na) pi[i++] = 0;
    if (i == ns) break;
  }
  QTable q(ns, na);
  for (StateId s = 0; s < ns; ++s) {
    if (mdp.is_terminal(s)) continue;
    for (ActionId a = 0; a < na; ++a) q(s, a) = mdp.reward(s, a) + mdp.gamma() * v_star[mdp.successor(s, a)];
  }
  return q;
}

}  // namespace

TEST(QTable, GreedyTiesGoToLowestIndex) {
  QTable q(2, 3);
  q(0, 1) = 2.0;
  q(0, 2) = 2.0;
  EXPECT_EQ(q.greedy_action(0), 1u);
  EXPECT_EQ(q.greedy_action(1), 0u);
  EXPECT_DOUBLE_EQ(q.max_value(0), 2.0);
}

TEST(QTable, DistanceIsSupNorm) {
  QTable a(2, 2), b(2, 2);
  b(1, 0) = -3.0;
  b(0, 1) = 2.0;
  EXPECT_DOUBLE_EQ(a.distance(b), 3.0);
  EXPECT_THROW(a.distance(QTable(3, 2)), InvalidArgument);
}

TEST(TabularMDP, RejectsBadInputs) {
  EXPECT_THROW(TabularMDP(0, 2, 0.9), InvalidArgument);
  EXPECT_THROW(TabularMDP(2, 2, 1.5), InvalidArgument);
  TabularMDP mdp(3, 2, 0.9);
  EXPECT_THROW(mdp.set_transition(0, 0, 3, 0.0), InvalidArgument);
  EXPECT_THROW(mdp.set_transition(0, 2, 1, 0.0), InvalidArgument);
  EXPECT_THROW(mdp.set_transition(0, 0, 1, NAN), InvalidArgument);
  mdp.set_terminal(2);
  EXPECT_THROW(mdp.set_transition(2, 0, 1, 0.0), InvalidArgument);
}

TEST(TabularMDP, TerminalStatesAbsorbWithZeroReward) {
  TabularMDP mdp(2, 2, 0.9);
  mdp.set_transition(0, 1, 1, 5.0);
  mdp.set_terminal(1);
  auto st = mdp.step(0, 1);
  EXPECT_EQ(st.next, 1u);
  EXPECT_DOUBLE_EQ(st.reward, 5.0);
  EXPECT_TRUE(st.done);
  EXPECT_EQ(mdp.successor(1, 0), 1u);
  EXPECT_DOUBLE_EQ(mdp.reward(1, 1), 0.0);
}

TEST(ValueIteration, ChainValuesByHand) {
  QTable q = value_iteration(make_chain(0.9));
  EXPECT_NEAR(q(2, chain::kRight), 1.0, 1e-9);
  EXPECT_NEAR(q(1, chain::kRight), 0.9, 1e-9);
  EXPECT_NEAR(q(0, chain::kRight), 0.81, 1e-9);
  EXPECT_NEAR(q(2, chain::kLeft), 0.81, 1e-9);
  EXPECT_NEAR(q(1, chain::kLeft), 0.729, 1e-9);
  EXPECT_NEAR(q(0, chain::kLeft), 0.729, 1e-9);
  EXPECT_DOUBLE_EQ(q(3, 0), 0.0);
}

TEST(ValueIteration, MatchesPolicyEnumerationOnRandomMdps) {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::size_t ns = 2 + trial % 4, na = 2 + trial % 2;
    TabularMDP mdp = random_mdp(ns, na, trial % 2, 0.8, rng);
    QTable q = value_iteration(mdp, 1e-12);
    EXPECT_LT(q.distance(brute_force_q_star(mdp)), 1e-8) << "trial " << trial;
    // Bellman optimality: Q* is a fixed point of the backup.
    EXPECT_LT(bellman_backup(mdp, q).distance(q), 1e-10);
  }
}

TEST(ValueIteration, ThrowsConvergenceErrorWithResidual) {
  TabularMDP mdp(1, 1, 1.0);
  mdp.set_transition(0, 0, 0, 1.0);  // undiscounted loop: values grow without bound
  try {
    value_iteration(mdp, 1e-9, 50);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.iterations(), 50);
    EXPECT_GT(e.residual(), 0.5);
  }
}

TEST(ValueIteration, GammaZeroIsImmediateReward) {
  Rng rng(3);
  TabularMDP mdp = random_mdp(4, 3, 1, 0.0, rng);
  QTable q = value_iteration(mdp);
  for (StateId s = 0; s < 3; ++s)
    for (ActionId a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(q(s, a), mdp.reward(s, a));
}

TEST(EpsilonGreedy, ProbabilitiesSumToOne) {
  std::vector<double> row{0.1, 0.7, 0.7, -1.0};
  for (double eps : {0.0, 0.2, 1.0}) {
    double sum = 0.0;
    for (ActionId a = 0; a < 4; ++a) sum += epsilon_greedy_prob(row, eps, a);
    EXPECT_NEAR(sum, 1.0, 1e-15);
  }
  EXPECT_DOUBLE_EQ(epsilon_greedy_prob(row, 0.2, 1), 0.8 + 0.05);
  EXPECT_DOUBLE_EQ(epsilon_greedy_prob(row, 0.2, 2), 0.05);
}

TEST(EpsilonGreedy, EmpiricalFrequenciesPassChiSquare) {
  std::vector<double> row{0.0, 0.0, 3.0, 1.0};
  const double eps = 0.3;
  const int n = 40000;
  Rng rng(5);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) ++counts[epsilon_greedy(row, eps, rng)];
  double chi2 = 0.0;
  for (ActionId a = 0; a < 4; ++a) {
    double expected = n * epsilon_greedy_prob(row, eps, a);
    chi2 += (counts[a] - expected) * (counts[a] - expected) / expected;
  }
  EXPECT_LT(chi2, 16.27);  // df = 3, p = 0.001
}

TEST(Rollout, FixedRightPolicySolvesChain) {
  Rng rng(0);
  Episode e = rollout(make_chain(), fixed_action_policy(2, chain::kRight), rng, 100);
  ASSERT_EQ(e.size(), 3u);
  EXPECT_TRUE(e.terminated());
  EXPECT_DOUBLE_EQ(e.total_reward(), 1.0);
  EXPECT_TRUE(is_valid_episode(e));
}

TEST(Rollout, StopsAtMaxSteps) {
  Rng rng(0);
  Episode e = rollout(make_chain(), fixed_action_policy(2, chain::kLeft), rng, 7);
  EXPECT_EQ(e.size(), 7u);
  EXPECT_FALSE(e.terminated());
}

TEST(Episode, ValidityChecksChainingAndTerminalPosition) {
  Episode e = chain_revisit_episode();
  EXPECT_TRUE(is_valid_episode(e));
  Episode broken = e;
  broken.transitions[2].s = 0;
  EXPECT_FALSE(is_valid_episode(broken));
  Episode early = e;
  early.transitions[1].terminal = true;
  EXPECT_FALSE(is_valid_episode(early));
  EXPECT_FALSE(is_valid_episode(Episode{}));
}

TEST(Property, RandomRolloutsAreValidEpisodes) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    TabularMDP mdp = random_mdp(5, 3, 1, 0.9, rng);
    auto uniform = [](StateId) { return std::vector<double>(3, 1.0 / 3.0); };
    Episode e = rollout(mdp, uniform, rng, 30);
    ASSERT_FALSE(e.empty());
    EXPECT_TRUE(is_valid_episode(e));
    EXPECT_EQ(e[0].s, mdp.start_state());
    for (const auto& t : e.transitions) EXPECT_EQ(t.s_next, mdp.successor(t.s, t.a));
  }
}
