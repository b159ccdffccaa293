#include "ebu/replay.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "ebu/error.hpp"

namespace ebu {

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw InvalidArgument("ReplayMemory: capacity must be positive");
}

std::size_t ReplayMemory::num_complete_episodes() const noexcept { return complete_count_; }

void ReplayMemory::store(const Transition& t) {
  if (has_open_episode()) {
    const Transition& last = transitions_.back();
    if (last.s_next != t.s) throw InvalidArgument("ReplayMemory::store: transition does not chain onto open episode");
    ++episodes_.back().length;
  } else {
    episodes_.push_back({base_ + transitions_.size(), 1, false});
  }
  transitions_.push_back(t);
  if (t.terminal) {
    episodes_.back().complete = true;
    ++complete_count_;
  }
  evict();
}

void ReplayMemory::end_episode() {
  if (!has_open_episode()) return;
  episodes_.back().complete = true;
  ++complete_count_;
}

void ReplayMemory::evict() {
  while (transitions_.size() > capacity_) {
    EpisodeRecord& front = episodes_.front();
    if (front.complete || episodes_.size() > 1) {
      for (std::size_t i = 0; i < front.length; ++i) transitions_.pop_front();
      base_ += front.length;
      if (front.complete) --complete_count_;
      episodes_.pop_front();
    } else {
      // The open episode alone overflows: drop its oldest step.
      transitions_.pop_front();
      ++base_;
      ++front.start;
      --front.length;
    }
  }
}

Episode ReplayMemory::episode(std::size_t index) const {
  const EpisodeRecord& rec = episodes_.at(index);
  Episode e;
  auto first = transitions_.begin() + static_cast<std::ptrdiff_t>(rec.start - base_);
  e.transitions.assign(first, first + static_cast<std::ptrdiff_t>(rec.length));
  return e;
}

Episode ReplayMemory::sample_episode(Rng& rng, EpisodeSampling mode) const {
  if (complete_count_ == 0) throw InvalidArgument("ReplayMemory::sample_episode: no complete episode stored");
  // Only the newest record can still be open, so sealed episodes are a prefix.
  if (mode == EpisodeSampling::kUniform) {
    std::uniform_int_distribution<std::size_t> pick(0, complete_count_ - 1);
    return episode(pick(rng));
  }
  const EpisodeRecord& last_sealed = episodes_[complete_count_ - 1];
  std::size_t sealed_transitions = last_sealed.start + last_sealed.length - base_;
  std::uniform_int_distribution<std::size_t> pick(0, sealed_transitions - 1);
  std::size_t pos = base_ + pick(rng);
  auto it = std::upper_bound(episodes_.begin(), episodes_.begin() + static_cast<std::ptrdiff_t>(complete_count_), pos,
                             [](std::size_t p, const EpisodeRecord& r) { return p < r.start; });
  return episode(static_cast<std::size_t>(it - episodes_.begin()) - 1);
}

std::vector<Transition> ReplayMemory::sample_uniform(std::size_t batch_size, Rng& rng) const {
  if (empty()) throw InvalidArgument("ReplayMemory::sample_uniform: memory is empty");
  std::vector<Transition> batch;
  batch.reserve(batch_size);
  std::uniform_int_distribution<std::size_t> pick(0, transitions_.size() - 1);
  for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(transitions_[pick(rng)]);
  return batch;
}

void ReplayMemory::clear() {
  transitions_.clear();
  episodes_.clear();
  base_ = 0;
  complete_count_ = 0;
}

namespace {

constexpr char kReplayMagic[8] = {'E', 'B', 'U', 'R', 'E', 'P', 'L', '1'};
constexpr std::uint8_t kFlagTerminal = 1;
constexpr std::uint8_t kFlagTruncatedEnd = 2;

template <typename T>
void put(std::ofstream& out, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

template <typename T>
T get(std::ifstream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) throw FormatError("replay dump: truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{buf[i]} << (8 * i);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

}  // namespace

void ReplayMemory::dump(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("replay dump: cannot open " + path.string());
  out.write(kReplayMagic, sizeof kReplayMagic);
  put<std::uint64_t>(out, capacity_);
  put<std::uint64_t>(out, transitions_.size());
  std::size_t rec = 0;
  for (std::size_t i = 0; i < transitions_.size(); ++i) {
    while (episodes_[rec].start + episodes_[rec].length <= base_ + i) ++rec;
    const Transition& t = transitions_[i];
    bool last_of_record = base_ + i + 1 == episodes_[rec].start + episodes_[rec].length;
    std::uint8_t flag = 0;
    if (t.terminal)
      flag = kFlagTerminal;
    else if (last_of_record && episodes_[rec].complete)
      flag = kFlagTruncatedEnd;
    put<std::uint64_t>(out, t.s);
    put<std::uint64_t>(out, t.a);
    put<double>(out, t.r);
    put<std::uint64_t>(out, t.s_next);
    out.put(static_cast<char>(flag));
  }
  if (!out) throw Error("replay dump: write failed");
}

ReplayMemory ReplayMemory::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("replay dump: cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kReplayMagic, 8) != 0) throw FormatError("replay dump: bad magic");
  auto capacity = get<std::uint64_t>(in);
  auto count = get<std::uint64_t>(in);
  if (capacity == 0 || count > capacity) throw FormatError("replay dump: inconsistent header");
  ReplayMemory memory(capacity);
  for (std::uint64_t i = 0; i < count; ++i) {
    Transition t;
    t.s = static_cast<StateId>(get<std::uint64_t>(in));
    t.a = static_cast<ActionId>(get<std::uint64_t>(in));
    t.r = get<double>(in);
    t.s_next = static_cast<StateId>(get<std::uint64_t>(in));
    int flag = in.get();
    if (flag == std::char_traits<char>::eof() || flag > kFlagTruncatedEnd) throw FormatError("replay dump: bad flag");
    t.terminal = flag == kFlagTerminal;
    memory.store(t);
    if (flag == kFlagTruncatedEnd) memory.end_episode();
  }
  return memory;
}

}  // namespace ebu
