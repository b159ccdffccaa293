#pragma once

// Shared generators for the property tests.

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ebu/harness.hpp"
#include "ebu/mdp.hpp"

namespace ebu::fixtures {

/// Random walk on `mdp` from a random non-terminal state. Terminated when it hits a
/// terminal, otherwise truncated after `max_len` steps.
inline Episode random_walk(const TabularMDP& mdp, Rng& rng, std::size_t max_len) {
  std::uniform_int_distribution<ActionId> act(0, static_cast<ActionId>(mdp.num_actions() - 1));
  std::uniform_int_distribution<StateId> st(0, static_cast<StateId>(mdp.num_states() - 1));
  StateId s;
  do s = st(rng);
  while (mdp.is_terminal(s));
  Episode e;
  for (std::size_t t = 0; t < max_len; ++t) {
    ActionId a = act(rng);
    auto r = mdp.step(s, a);
    e.transitions.push_back({s, a, r.reward, r.next, r.done, 1.0 / static_cast<double>(mdp.num_actions())});
    if (r.done) break;
    s = r.next;
  }
  return e;
}

/// Terminating episode that never visits a state twice: a fresh line of states
/// 0 -> 1 -> ... -> len with random actions and rewards.
inline Episode repeat_free_episode(std::size_t len, std::size_t num_actions, Rng& rng) {
  std::uniform_int_distribution<ActionId> act(0, static_cast<ActionId>(num_actions - 1));
  std::uniform_real_distribution<double> rew(-1.0, 1.0);
  Episode e;
  for (std::size_t t = 0; t < len; ++t)
    e.transitions.push_back({static_cast<StateId>(t), act(rng), rew(rng), static_cast<StateId>(t + 1), t + 1 == len});
  return e;
}

inline QTable random_table(std::size_t ns, std::size_t na, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  QTable q(ns, na);
  for (double& x : q.values()) x = u(rng);
  return q;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ebu_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ebu::fixtures
