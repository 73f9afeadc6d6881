#pragma once

#include <cstdint>
#include <vector>

#include "toric/lattice.hpp"
#include "toric/rng.hpp"

namespace toric {

// One environment transition. The action is stored as the absolute qubit
// index; the (perspective, action-id) pair that produced it is recomputed
// from `state` when the transition is replayed.
struct Experience {
  Syndrome state;
  int action = 0;
  double reward = 0.0;
  Syndrome next_state;
  bool terminal = false;
};

// Bounded FIFO of transitions. Index 0 is always the oldest entry, i.e. the
// next one to be evicted. Storage grows on demand, so an under-filled memory
// never pays for its capacity.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity = 3'000'000);

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }

  void append(Experience e);

  const Experience& operator[](std::size_t i) const;

  // `count` distinct positions in [0, size()), uniform without replacement,
  // sorted ascending. Throws std::invalid_argument if count exceeds size.
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::vector<Experience> data_;
  std::size_t head_ = 0;  // position of the oldest entry once the ring is full
};

}  // namespace toric
