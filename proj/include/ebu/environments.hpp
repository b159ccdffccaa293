#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ebu/idx.hpp"
#include "ebu/mdp.hpp"

namespace ebu {

// Four-state navigation chain s1..s4 (ids 0..3), actions left = 0 and right = 1.
// s4 is terminal; moving right from s3 pays 1. Left at s1 self-loops.
namespace chain {
inline constexpr ActionId kLeft = 0;
inline constexpr ActionId kRight = 1;
}  // namespace chain

TabularMDP make_chain(double gamma = 0.9);

/// The stored episode s1 -> s2 -> s3 -> s2 -> s3 -> s4 used throughout the chain examples.
Episode chain_revisit_episode();

// Branching domain: chain states s_1..s_n (ids 0..n-1). At each s_i action
// `kExit` ends the episode in its own terminal with `distractor_reward`; action
// `kContinue` moves to s_{i+1}, and from s_n into the deepest terminal, which
// pays 1. Terminal ids are n..2n.
namespace branching {
inline constexpr ActionId kExit = 0;
inline constexpr ActionId kContinue = 1;
}  // namespace branching

TabularMDP make_branching(int n, double gamma = 1.0, double distractor_reward = 0.0);

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

// Maze actions.
namespace maze {
inline constexpr ActionId kUp = 0;
inline constexpr ActionId kDown = 1;
inline constexpr ActionId kLeft = 2;
inline constexpr ActionId kRight = 3;
inline constexpr std::size_t kNumActions = 4;
inline constexpr double kGoalReward = 1000.0;
inline constexpr double kBumpReward = -1.0;
inline constexpr std::size_t kMaxEpisodeSteps = 1000;
}  // namespace maze

struct MazeSpec {
  int width = 0;
  int height = 0;
  double wall_density = 0.0;
  std::vector<std::uint8_t> walls;  // row-major, 1 = wall
  Cell start;
  Cell goal;

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool is_wall(Cell c) const { return walls[static_cast<std::size_t>(c.y) * width + c.x] != 0; }
  StateId state_of(Cell c) const { return static_cast<StateId>(c.y * width + c.x); }
  Cell cell_of(StateId s) const { return {static_cast<int>(s) % width, static_cast<int>(s) / width}; }
  std::size_t wall_count() const;
};

/// Empty maze with start (0,0) and goal (w-1,h-1).
MazeSpec empty_maze(int width, int height);

struct GeneratedMaze {
  MazeSpec maze;
  int attempts = 0;
};

/// Draws each non-start, non-goal cell as a wall with probability `wall_density`,
/// redrawing until the goal is reachable. Throws Error after `max_attempts` draws.
GeneratedMaze generate_maze(int width, int height, double wall_density, Rng& rng, int max_attempts = 1000);

/// BFS distance from start to goal under 4-neighbour moves. Throws Error if unreachable.
int shortest_path_len(const MazeSpec& maze);

struct MazeStep {
  Cell next;
  double reward;
  bool done;
};

/// Bumping a wall or the border keeps the agent in place with reward -1; entering the goal pays 1000.
MazeStep maze_step(const MazeSpec& maze, Cell pos, ActionId action);

/// Deterministic MDP over maze cells (wall cells are unreachable, goal terminal).
TabularMDP maze_to_mdp(const MazeSpec& maze, double gamma);

/// Plain-text grid: '#' wall, '.' free, 'S' start, 'G' goal, one row per line.
std::string maze_to_text(const MazeSpec& maze);
MazeSpec maze_from_text(const std::string& text);

/// Either exact coordinates or a pair of 28x28 digit images for (x, y).
struct MazeObservation {
  std::optional<Cell> coords;
  std::vector<double> x_image;
  std::vector<double> y_image;
  std::array<int, 2> labels{-1, -1};
};

MazeObservation encode_coordinates(Cell pos);

/// Picks uniformly among images whose label matches each coordinate; pixels scaled to [0, 1].
class DigitEncoder {
 public:
  explicit DigitEncoder(IdxImageSet images);

  MazeObservation encode(Cell pos, Rng& rng) const;
  const IdxImageSet& images() const noexcept { return images_; }

 private:
  IdxImageSet images_;
  std::array<std::vector<std::size_t>, 10> by_label_;
};

MazeObservation encode_state(Cell pos, const IdxImageSet& images, Rng& rng);

}  // namespace ebu
