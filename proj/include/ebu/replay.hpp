#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <vector>

#include "ebu/mdp.hpp"

namespace ebu {

enum class EpisodeSampling {
  kUniform,             // every sealed episode equally likely
  kLengthProportional,  // probability proportional to episode length
};

/// Bounded transition store that keeps episode boundaries.
///
/// Transitions are appended to an open episode. A terminal transition seals the
/// episode; `end_episode()` seals a truncated (time-limited) one. Only sealed
/// episodes are returned by `sample_episode`. When the capacity is exceeded the
/// oldest episodes are dropped whole. If the open episode alone exceeds the
/// capacity its oldest transitions are dropped, which keeps it chained.
class ReplayMemory {
 public:
  struct EpisodeRecord {
    std::size_t start;  // absolute position of the first transition
    std::size_t length;
    bool complete;
  };

  explicit ReplayMemory(std::size_t capacity);

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return transitions_.size(); }
  bool empty() const noexcept { return transitions_.empty(); }
  std::size_t num_complete_episodes() const noexcept;
  const std::deque<EpisodeRecord>& episodes() const noexcept { return episodes_; }

  /// Appends to the open episode, or opens a new one. Throws InvalidArgument if
  /// `t.s` does not chain onto the open episode's last successor.
  void store(const Transition& t);

  /// Seals the open episode without a terminal transition. No-op if none is open.
  void end_episode();

  Episode episode(std::size_t index) const;
  const Transition& transition(std::size_t index) const { return transitions_.at(index); }

  Episode sample_episode(Rng& rng, EpisodeSampling mode = EpisodeSampling::kUniform) const;
  std::vector<Transition> sample_uniform(std::size_t batch_size, Rng& rng) const;

  void clear();

  /// Checkpoint as a flat little-endian record stream; see README for the layout.
  void dump(const std::filesystem::path& path) const;
  static ReplayMemory load(const std::filesystem::path& path);

 private:
  void evict();
  bool has_open_episode() const noexcept { return !episodes_.empty() && !episodes_.back().complete; }

  std::size_t capacity_;
  std::size_t base_ = 0;  // absolute index of transitions_.front()
  std::deque<Transition> transitions_;
  std::deque<EpisodeRecord> episodes_;
  std::size_t complete_count_ = 0;
};

}  // namespace ebu
