#include "toric/replay.hpp"

#include <algorithm>
#include <stdexcept>

namespace toric {

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayMemory::append(Experience e) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(e));
    return;
  }
  data_[head_] = std::move(e);
  head_ = (head_ + 1) % capacity_;
}

const Experience& ReplayMemory::operator[](std::size_t i) const {
  if (i >= data_.size()) throw std::out_of_range("replay index out of range");
  if (data_.size() < capacity_) return data_[i];
  return data_[(head_ + i) % capacity_];
}

std::vector<std::size_t> ReplayMemory::sample_indices(std::size_t count, Rng& rng) const {
  const std::size_t n = data_.size();
  if (count > n) throw std::invalid_argument("sample larger than replay memory");
  // Floyd's subset sampling: each of the n-choose-count subsets is equally
  // likely, with exactly `count` draws.
  std::vector<std::size_t> picked;
  picked.reserve(count);
  for (std::size_t j = n - count; j < n; ++j) {
    std::size_t t = static_cast<std::size_t>(rng.below(j + 1));
    if (std::find(picked.begin(), picked.end(), t) != picked.end()) t = j;
    picked.push_back(t);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace toric
