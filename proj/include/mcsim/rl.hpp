/*

Copyright 2026 The mcsim Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

 https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.

*/

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace mcsim::rl {

struct RlParams {
  std::uint32_t num_tables = 32;
  std::uint32_t table_size = 256;
  double alpha = 0.1;     ///< learning rate
  double gamma = 0.95;    ///< discount
  double epsilon = 0.05;  ///< random action probability
  std::uint64_t starvation_threshold = 10'000;
  double column_reward = 1.0;
  std::uint64_t seed = 1;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Q-value store made of several small hashed tables. Q(key) is the mean of
/// the entry `key` selects in each table; updates move every selected entry
/// by the same amount, so tables stay in lockstep.
class CmacQTable {
 public:
  CmacQTable(std::uint32_t tables, std::uint32_t size)
      : tables_(tables), size_(size), values_(std::size_t{tables} * size, 0.0), seeds_(tables) {
    for (std::uint32_t k = 0; k < tables; ++k) {
      seeds_[k].a = splitmix64(2 * k + 1) | 1;
      seeds_[k].b = splitmix64(2 * k + 2);
    }
  }

  std::uint32_t tables() const { return tables_; }
  std::uint32_t size() const { return size_; }

  /// Index `key` selects in table `k`: multiply-shift hash of key with
  /// per-table random odd multiplier and offset.
  std::uint32_t index(std::uint32_t k, std::uint64_t key) const {
    const std::uint64_t h = splitmix64(key * seeds_[k].a + seeds_[k].b);
    return static_cast<std::uint32_t>(h % size_);
  }

  double value(std::uint64_t key) const {
    double sum = 0;
    for (std::uint32_t k = 0; k < tables_; ++k) sum += values_[std::size_t{k} * size_ + index(k, key)];
    return sum / tables_;
  }

  /// Moves Q(key) by alpha * (target - Q(key)).
  void update(std::uint64_t key, double target, double alpha) {
    const double delta = alpha * (target - value(key));
    for (std::uint32_t k = 0; k < tables_; ++k) values_[std::size_t{k} * size_ + index(k, key)] += delta;
  }

 private:
  struct Seed {
    std::uint64_t a, b;
  };
  std::uint32_t tables_;
  std::uint32_t size_;
  std::vector<double> values_;
  std::vector<Seed> seeds_;
};

/// On-policy (SARSA) learner over opaque state-action keys.
class Learner {
 public:
  explicit Learner(const RlParams& p) : params_(p), q_(p.num_tables, p.table_size), rng_(p.seed) {}

  const CmacQTable& q() const { return q_; }
  const RlParams& params() const { return params_; }
  void set_epsilon(double e) { params_.epsilon = e; }

  /// Epsilon-greedy choice among `keys`; greedy ties go to the earliest key,
  /// so callers order candidates by their tie-break preference.
  std::size_t choose(std::span<const std::uint64_t> keys) {
    if (keys.size() == 1) {
      // Keep the random stream aligned regardless of candidate count.
      (void)explore();
      return 0;
    }
    if (explore()) return std::uniform_int_distribution<std::size_t>(0, keys.size() - 1)(rng_);
    // Candidates share few distinct keys; evaluate each once.
    memo_.clear();
    auto value = [&](std::uint64_t k) {
      for (const auto& [mk, mv] : memo_)
        if (mk == k) return mv;
      const double v = q_.value(k);
      memo_.emplace_back(k, v);
      return v;
    };
    std::size_t best = 0;
    double best_q = value(keys[0]);
    for (std::size_t i = 1; i < keys.size(); ++i) {
      const double v = value(keys[i]);
      if (v > best_q) {
        best_q = v;
        best = i;
      }
    }
    return best;
  }

  /// Records that `key` was taken and earned `reward`; updates the previous
  /// pair toward reward_prev + gamma * Q(key).
  void step(std::uint64_t key, double reward) {
    if (prev_key_) q_.update(*prev_key_, prev_reward_ + params_.gamma * q_.value(key), params_.alpha);
    prev_key_ = key;
    prev_reward_ = reward;
  }

 private:
  bool explore() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < params_.epsilon; }

  RlParams params_;
  CmacQTable q_;
  std::mt19937_64 rng_;
  std::optional<std::uint64_t> prev_key_;
  double prev_reward_ = 0;
  std::vector<std::pair<std::uint64_t, double>> memo_;
};

}  // namespace mcsim::rl
