#include "ebu/environments.hpp"

#include <deque>
#include <sstream>

#include "ebu/error.hpp"

namespace ebu {

TabularMDP make_chain(double gamma) {
  TabularMDP mdp(4, 2, gamma);
  mdp.set_terminal(3);
  for (StateId s = 0; s < 3; ++s) {
    mdp.set_transition(s, chain::kLeft, s == 0 ? 0 : s - 1, 0.0);
    mdp.set_transition(s, chain::kRight, s + 1, s == 2 ? 1.0 : 0.0);
  }
  mdp.set_start_state(0);
  return mdp;
}

Episode chain_revisit_episode() {
  using chain::kLeft;
  using chain::kRight;
  Episode e;
  e.transitions = {
      {0, kRight, 0.0, 1, false}, {1, kRight, 0.0, 2, false}, {2, kLeft, 0.0, 1, false},
      {1, kRight, 0.0, 2, false}, {2, kRight, 1.0, 3, true},
  };
  return e;
}

TabularMDP make_branching(int n, double gamma, double distractor_reward) {
  if (n < 1) throw InvalidArgument("make_branching: n must be at least 1");
  const auto un = static_cast<StateId>(n);
  TabularMDP mdp(2 * un + 1, 2, gamma);
  for (StateId t = un; t <= 2 * un; ++t) mdp.set_terminal(t);
  for (StateId i = 0; i < un; ++i) {
    mdp.set_transition(i, branching::kExit, un + i, distractor_reward);
    if (i + 1 < un)
      mdp.set_transition(i, branching::kContinue, i + 1, 0.0);
    else
      mdp.set_transition(i, branching::kContinue, 2 * un, 1.0);
  }
  mdp.set_start_state(0);
  return mdp;
}

std::size_t MazeSpec::wall_count() const {
  std::size_t n = 0;
  for (auto w : walls) n += w;
  return n;
}

MazeSpec empty_maze(int width, int height) {
  if (width < 1 || height < 1) throw InvalidArgument("maze: dimensions must be positive");
  MazeSpec m;
  m.width = width;
  m.height = height;
  m.walls.assign(static_cast<std::size_t>(width) * height, 0);
  m.start = {0, 0};
  m.goal = {width - 1, height - 1};
  return m;
}

namespace {

constexpr int kDx[4] = {0, 0, -1, 1};
constexpr int kDy[4] = {-1, 1, 0, 0};

std::optional<int> bfs_distance(const MazeSpec& maze) {
  std::vector<int> dist(maze.walls.size(), -1);
  std::deque<Cell> frontier{maze.start};
  dist[maze.state_of(maze.start)] = 0;
  while (!frontier.empty()) {
    Cell c = frontier.front();
    frontier.pop_front();
    int d = dist[maze.state_of(c)];
    if (c == maze.goal) return d;
    for (int k = 0; k < 4; ++k) {
      Cell n{c.x + kDx[k], c.y + kDy[k]};
      if (!maze.in_bounds(n) || maze.is_wall(n) || dist[maze.state_of(n)] >= 0) continue;
      dist[maze.state_of(n)] = d + 1;
      frontier.push_back(n);
    }
  }
  return std::nullopt;
}

}  // namespace

GeneratedMaze generate_maze(int width, int height, double wall_density, Rng& rng, int max_attempts) {
  if (!(wall_density >= 0.0 && wall_density < 1.0)) throw InvalidArgument("generate_maze: density outside [0, 1)");
  MazeSpec m = empty_maze(width, height);
  m.wall_density = wall_density;
  std::bernoulli_distribution wall(wall_density);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        Cell c{x, y};
        bool blocked = !(c == m.start) && !(c == m.goal) && wall(rng);
        m.walls[m.state_of(c)] = blocked ? 1 : 0;
      }
    if (bfs_distance(m)) return {m, attempt};
  }
  std::ostringstream msg;
  msg << "generate_maze: no solvable maze after " << max_attempts << " attempts at density " << wall_density;
  throw Error(msg.str());
}

int shortest_path_len(const MazeSpec& maze) {
  auto d = bfs_distance(maze);
  if (!d) throw Error("shortest_path_len: goal unreachable");
  return *d;
}

MazeStep maze_step(const MazeSpec& maze, Cell pos, ActionId action) {
  if (action >= maze::kNumActions) throw InvalidArgument("maze_step: bad action");
  Cell n{pos.x + kDx[action], pos.y + kDy[action]};
  if (!maze.in_bounds(n) || maze.is_wall(n)) return {pos, maze::kBumpReward, false};
  if (n == maze.goal) return {n, maze::kGoalReward, true};
  return {n, 0.0, false};
}

TabularMDP maze_to_mdp(const MazeSpec& maze, double gamma) {
  TabularMDP mdp(maze.walls.size(), maze::kNumActions, gamma);
  StateId goal = maze.state_of(maze.goal);
  mdp.set_terminal(goal);
  for (StateId s = 0; s < maze.walls.size(); ++s) {
    Cell c = maze.cell_of(s);
    if (s == goal || maze.is_wall(c)) continue;
    for (ActionId a = 0; a < maze::kNumActions; ++a) {
      auto st = maze_step(maze, c, a);
      mdp.set_transition(s, a, maze.state_of(st.next), st.reward);
    }
  }
  mdp.set_start_state(maze.state_of(maze.start));
  return mdp;
}

std::string maze_to_text(const MazeSpec& maze) {
  std::string out;
  for (int y = 0; y < maze.height; ++y) {
    for (int x = 0; x < maze.width; ++x) {
      Cell c{x, y};
      if (c == maze.start)
        out += 'S';
      else if (c == maze.goal)
        out += 'G';
      else
        out += maze.is_wall(c) ? '#' : '.';
    }
    out += '\n';
  }
  return out;
}

MazeSpec maze_from_text(const std::string& text) {
  std::vector<std::string> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw FormatError("maze text: no rows");
  MazeSpec m = empty_maze(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  bool have_start = false, have_goal = false;
  for (int y = 0; y < m.height; ++y) {
    if (static_cast<int>(rows[y].size()) != m.width) throw FormatError("maze text: ragged rows");
    for (int x = 0; x < m.width; ++x) {
      Cell c{x, y};
      switch (rows[y][x]) {
        case '#': m.walls[m.state_of(c)] = 1; break;
        case '.': break;
        case 'S': m.start = c; have_start = true; break;
        case 'G': m.goal = c; have_goal = true; break;
        default: throw FormatError(std::string("maze text: unexpected character '") + rows[y][x] + "'");
      }
    }
  }
  if (!have_start || !have_goal) throw FormatError("maze text: missing S or G");
  if (m.start == m.goal) throw FormatError("maze text: start equals goal");
  return m;
}

MazeObservation encode_coordinates(Cell pos) {
  MazeObservation obs;
  obs.coords = pos;
  obs.labels = {pos.x, pos.y};
  return obs;
}

DigitEncoder::DigitEncoder(IdxImageSet images) : images_(std::move(images)) {
  if (images_.labels.size() != images_.count) throw InvalidArgument("DigitEncoder: image set has no labels");
  for (std::size_t i = 0; i < images_.count; ++i) {
    if (images_.labels[i] > 9) throw InvalidArgument("DigitEncoder: labels must be digits");
    by_label_[images_.labels[i]].push_back(i);
  }
  for (int d = 0; d < 10; ++d)
    if (by_label_[d].empty()) throw InvalidArgument("DigitEncoder: no image for digit " + std::to_string(d));
}

MazeObservation DigitEncoder::encode(Cell pos, Rng& rng) const {
  if (pos.x < 0 || pos.x > 9 || pos.y < 0 || pos.y > 9)
    throw InvalidArgument("DigitEncoder: coordinates must be single digits");
  auto pick = [&](int digit) {
    const auto& pool = by_label_[digit];
    std::uniform_int_distribution<std::size_t> u(0, pool.size() - 1);
    auto img = images_.image(pool[u(rng)]);
    std::vector<double> px(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) px[i] = img[i] / 255.0;
    return px;
  };
  MazeObservation obs;
  obs.x_image = pick(pos.x);
  obs.y_image = pick(pos.y);
  obs.labels = {pos.x, pos.y};
  return obs;
}

MazeObservation encode_state(Cell pos, const IdxImageSet& images, Rng& rng) {
  return DigitEncoder(images).encode(pos, rng);
}

}  // namespace ebu
