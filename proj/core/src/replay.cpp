#include <string>

#include "msched/algos.hpp"
#include "msched/errors.hpp"

namespace msched {

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw UsageError("replay buffer capacity must be positive");
  data_.reserve(std::min<size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<size_t> ReplayBuffer::sample_indices(size_t batch_size, std::mt19937_64& rng) const {
  if (batch_size == 0 || data_.size() < batch_size) {
    throw UsageError("replay buffer holds " + std::to_string(data_.size()) +
                     " transitions, cannot sample a batch of " + std::to_string(batch_size));
  }
  std::uniform_int_distribution<size_t> pick(0, data_.size() - 1);
  std::vector<size_t> idx(batch_size);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Batch ReplayBuffer::gather(const std::vector<size_t>& indices) const {
  const auto n = static_cast<Eigen::Index>(indices.size());
  const Transition& first = data_.at(indices.front());
  Batch b;
  b.obs.resize(first.obs.size(), n);
  b.action.resize(first.action.size(), n);
  b.next_obs.resize(first.next_obs.size(), n);
  b.reward.resize(n);
  b.done.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Transition& t = data_.at(indices[static_cast<size_t>(k)]);
    b.obs.col(k) = t.obs;
    b.action.col(k) = t.action;
    b.next_obs.col(k) = t.next_obs;
    b.reward[k] = t.reward;
    b.done[k] = t.done ? 1.0 : 0.0;
  }
  return b;
}

Batch ReplayBuffer::sample(size_t batch_size, std::mt19937_64& rng) const {
  return gather(sample_indices(batch_size, rng));
}

}  // namespace msched
