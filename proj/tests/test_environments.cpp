#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include "ebu/environments.hpp"
#include "ebu/error.hpp"
#include "ebu/idx.hpp"
#include "test_util.hpp"

using namespace ebu;

namespace {

// Shortest path by Bellman-Ford relaxation over the maze MDP's transition graph.
int relaxation_distance(const MazeSpec& maze) {
  TabularMDP mdp = maze_to_mdp(maze, 0.9);
  const int inf = std::numeric_limits<int>::max() / 2;
  std::vector<int> dist(mdp.num_states(), inf);
  dist[mdp.start_state()] = 0;
  for (std::size_t round = 0; round < mdp.num_states(); ++round)
    for (StateId s = 0; s < mdp.num_states(); ++s) {
      if (dist[s] == inf || mdp.is_terminal(s)) continue;
      for (ActionId a = 0; a < mdp.num_actions(); ++a) {
        StateId n = mdp.successor(s, a);
        dist[n] = std::min(dist[n], dist[s] + 1);
      }
    }
  return dist[maze.state_of(maze.goal)];
}

IdxImageSet synthetic_digits(std::size_t per_digit) {
  IdxImageSet set;
  set.rows = 28;
  set.cols = 28;
  set.count = 10 * per_digit;
  for (std::size_t i = 0; i < set.count; ++i) {
    auto label = static_cast<std::uint8_t>(i % 10);
    set.labels.push_back(label);
    // Pixel value encodes the digit and the copy index so tests can tell images apart.
    for (std::size_t p = 0; p < 28 * 28; ++p) set.pixels.push_back(static_cast<std::uint8_t>(label * 20 + i / 10));
  }
  return set;
}

}  // namespace

TEST(Chain, RevisitEpisodeFollowsDynamics) {
  TabularMDP mdp = make_chain();
  Episode e = chain_revisit_episode();
  ASSERT_EQ(e.size(), 5u);
  for (const auto& t : e.transitions) {
    auto st = mdp.step(t.s, t.a);
    EXPECT_EQ(st.next, t.s_next);
    EXPECT_DOUBLE_EQ(st.reward, t.r);
    EXPECT_EQ(st.done, t.terminal);
  }
  EXPECT_EQ(mdp.successor(0, chain::kLeft), 0u);
}

TEST(Branching, Layout) {
  TabularMDP mdp = make_branching(3, 1.0, 0.25);
  EXPECT_EQ(mdp.num_states(), 7u);
  for (StateId t = 3; t <= 6; ++t) EXPECT_TRUE(mdp.is_terminal(t));
  EXPECT_EQ(mdp.successor(0, branching::kContinue), 1u);
  EXPECT_EQ(mdp.successor(1, branching::kExit), 4u);
  EXPECT_DOUBLE_EQ(mdp.reward(1, branching::kExit), 0.25);
  EXPECT_EQ(mdp.successor(2, branching::kContinue), 6u);
  EXPECT_DOUBLE_EQ(mdp.reward(2, branching::kContinue), 1.0);
  EXPECT_THROW(make_branching(0), InvalidArgument);
}

TEST(Maze, StepBumpsAndGoal) {
  MazeSpec m = maze_from_text("S.#\n..G\n");
  auto bump = maze_step(m, {0, 0}, maze::kUp);
  EXPECT_EQ(bump.next, (Cell{0, 0}));
  EXPECT_DOUBLE_EQ(bump.reward, -1.0);
  EXPECT_FALSE(bump.done);
  auto wall = maze_step(m, {1, 0}, maze::kRight);
  EXPECT_EQ(wall.next, (Cell{1, 0}));
  EXPECT_DOUBLE_EQ(wall.reward, -1.0);
  auto goal = maze_step(m, {1, 1}, maze::kRight);
  EXPECT_TRUE(goal.done);
  EXPECT_DOUBLE_EQ(goal.reward, 1000.0);
  EXPECT_THROW(maze_step(m, {0, 0}, 4), InvalidArgument);
}

TEST(Maze, ShortestPathKnownLayouts) {
  EXPECT_EQ(shortest_path_len(empty_maze(10, 10)), 18);
  MazeSpec detour = maze_from_text(
      "S#...\n"
      ".#.#.\n"
      ".#.#.\n"
      "...#G\n");
  EXPECT_EQ(shortest_path_len(detour), 13);
  EXPECT_THROW(shortest_path_len(maze_from_text("S#\n#G\n")), Error);
}

TEST(Maze, TextRoundTrip) {
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    MazeSpec m = generate_maze(7, 5, 0.3, rng).maze;
    MazeSpec back = maze_from_text(maze_to_text(m));
    EXPECT_EQ(back.walls, m.walls);
    EXPECT_EQ(back.start, m.start);
    EXPECT_EQ(back.goal, m.goal);
  }
}

TEST(Maze, TextErrors) {
  EXPECT_THROW(maze_from_text(""), FormatError);
  EXPECT_THROW(maze_from_text("S..\n.G\n"), FormatError);
  EXPECT_THROW(maze_from_text("S.x\n..G\n"), FormatError);
  EXPECT_THROW(maze_from_text("...\n..G\n"), FormatError);
}

TEST(Maze, GenerationRespectsStartGoalAndReachability) {
  Rng rng(8);
  for (double density : {0.0, 0.2, 0.5}) {
    for (int i = 0; i < 30; ++i) {
      auto g = generate_maze(10, 10, density, rng);
      EXPECT_GE(g.attempts, 1);
      EXPECT_FALSE(g.maze.is_wall(g.maze.start));
      EXPECT_FALSE(g.maze.is_wall(g.maze.goal));
      EXPECT_EQ(g.maze.start, (Cell{0, 0}));
      EXPECT_EQ(g.maze.goal, (Cell{9, 9}));
      EXPECT_EQ(shortest_path_len(g.maze), relaxation_distance(g.maze));
      if (density == 0.0) EXPECT_EQ(g.maze.wall_count(), 0u);
    }
  }
}

TEST(Maze, UnconditionalWallFrequencyMatchesDensity) {
  // First-attempt mazes at low density are nearly unconditioned draws.
  Rng rng(13);
  std::size_t walls = 0, cells = 0;
  for (int i = 0; i < 400; ++i) {
    auto g = generate_maze(10, 10, 0.1, rng);
    if (g.attempts != 1) continue;
    walls += g.maze.wall_count();
    cells += 98;
  }
  double freq = static_cast<double>(walls) / static_cast<double>(cells);
  // Conditioning on solvability only lowers the frequency slightly at this density.
  EXPECT_NEAR(freq, 0.1, 0.01);
}

TEST(Maze, GenerationFailsWhenUnsolvable) {
  Rng rng(1);
  EXPECT_THROW(generate_maze(10, 10, 0.95, rng, 5), Error);
  EXPECT_THROW(generate_maze(10, 10, 1.0, rng), InvalidArgument);
}

TEST(Maze, MdpMatchesStepFunction) {
  Rng rng(2);
  MazeSpec m = generate_maze(6, 6, 0.3, rng).maze;
  TabularMDP mdp = maze_to_mdp(m, 0.9);
  EXPECT_EQ(mdp.start_state(), m.state_of(m.start));
  EXPECT_TRUE(mdp.is_terminal(m.state_of(m.goal)));
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) {
      Cell c{x, y};
      if (m.is_wall(c) || c == m.goal) continue;
      for (ActionId a = 0; a < 4; ++a) {
        auto st = maze_step(m, c, a);
        EXPECT_EQ(mdp.successor(m.state_of(c), a), m.state_of(st.next));
        EXPECT_DOUBLE_EQ(mdp.reward(m.state_of(c), a), st.reward);
      }
    }
}

TEST(Observation, CoordinatesAreExact) {
  auto obs = encode_coordinates({3, 7});
  ASSERT_TRUE(obs.coords.has_value());
  EXPECT_EQ(*obs.coords, (Cell{3, 7}));
  EXPECT_TRUE(obs.x_image.empty());
}

TEST(Observation, DigitImagesMatchCoordinateLabels) {
  DigitEncoder enc(synthetic_digits(3));
  Rng rng(6);
  std::set<double> seen;
  for (int i = 0; i < 200; ++i) {
    auto obs = enc.encode({4, 9}, rng);
    ASSERT_EQ(obs.x_image.size(), 784u);
    EXPECT_EQ(obs.labels[0], 4);
    EXPECT_EQ(obs.labels[1], 9);
    // First pixel = (20 * digit + copy) / 255.
    int x_digit = static_cast<int>(std::lround(obs.x_image[0] * 255.0)) / 20;
    int y_digit = static_cast<int>(std::lround(obs.y_image[0] * 255.0)) / 20;
    EXPECT_EQ(x_digit, 4);
    EXPECT_EQ(y_digit, 9);
    seen.insert(obs.x_image[0]);
  }
  EXPECT_EQ(seen.size(), 3u);  // every copy of the digit gets drawn
  EXPECT_THROW(enc.encode({10, 0}, rng), InvalidArgument);
}

TEST(Observation, EncoderNeedsEveryDigit) {
  IdxImageSet set = synthetic_digits(1);
  set.labels[3] = 4;  // no image of a 3 left
  EXPECT_THROW(DigitEncoder{set}, InvalidArgument);
}
