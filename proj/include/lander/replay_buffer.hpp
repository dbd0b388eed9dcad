#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

#include "lander/common.hpp"

namespace lander {

/// Mini-batch of transitions, one sample per column.
struct TransitionBatch {
  Eigen::MatrixXf observations;
  Eigen::MatrixXf actions;
  Eigen::RowVectorXf rewards;
  Eigen::MatrixXf next_observations;
  Eigen::RowVectorXf terminals;  // 1 for true terminations; 0 for running or truncated episodes
};

/// Fixed-capacity ring of transitions with uniform sampling over the filled region.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int action_dim)
      : capacity_(capacity), obs_dim_(obs_dim), action_dim_(action_dim) {
    if (capacity == 0) throw ContractError("ReplayBuffer: capacity must be > 0");
    const auto cap = static_cast<Eigen::Index>(capacity);
    obs_.resize(obs_dim, cap);
    next_obs_.resize(obs_dim, cap);
    actions_.resize(action_dim, cap);
    rewards_.resize(cap);
    terminals_.resize(cap);
  }

  void add(const Eigen::VectorXf& obs, const Eigen::VectorXf& action, float reward,
           const Eigen::VectorXf& next_obs, bool terminal) {
    if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_ || action.size() != action_dim_)
      throw ContractError("ReplayBuffer::add: transition shape mismatch");
    const auto i = static_cast<Eigen::Index>(cursor_);
    obs_.col(i) = obs;
    actions_.col(i) = action;
    rewards_[i] = reward;
    next_obs_.col(i) = next_obs;
    terminals_[i] = terminal ? 1.0f : 0.0f;
    cursor_ = (cursor_ + 1) % capacity_;
    if (size_ < capacity_) ++size_;
    ++total_added_;
  }

  TransitionBatch sample(std::size_t batch_size, Rng& rng) const {
    if (size_ == 0) throw ContractError("ReplayBuffer::sample: buffer is empty");
    TransitionBatch b;
    const auto n = static_cast<Eigen::Index>(batch_size);
    b.observations.resize(obs_dim_, n);
    b.next_observations.resize(obs_dim_, n);
    b.actions.resize(action_dim_, n);
    b.rewards.resize(n);
    b.terminals.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const auto i = static_cast<Eigen::Index>(rng() % size_);
      b.observations.col(k) = obs_.col(i);
      b.next_observations.col(k) = next_obs_.col(i);
      b.actions.col(k) = actions_.col(i);
      b.rewards[k] = rewards_[i];
      b.terminals[k] = terminals_[i];
    }
    return b;
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t total_added() const { return total_added_; }

  /// Reward of the transition at ring slot `slot` (tests).
  float reward_at(std::size_t slot) const { return rewards_[static_cast<Eigen::Index>(slot)]; }

 private:
  std::size_t capacity_;
  int obs_dim_;
  int action_dim_;
  Eigen::MatrixXf obs_, next_obs_, actions_;
  Eigen::RowVectorXf rewards_, terminals_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  std::size_t total_added_ = 0;
};

}  // namespace lander
