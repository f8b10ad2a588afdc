#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <unordered_set>
#include <vector>

#include "hadmc/errors.hpp"

namespace hadmc {

/// Fixed-capacity FIFO store. Once full, each push overwrites the oldest
/// entry.
template <typename Tuple>
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity = 0) : capacity_(capacity) {
    if (capacity == 0) return;
    items_.reserve(capacity);
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool full() const { return items_.size() == capacity_; }
  std::uint64_t pushes() const { return pushes_; }

  void push(Tuple t) {
    if (capacity_ == 0) throw ContractViolation("RingBuffer: zero capacity");
    if (items_.size() < capacity_) {
      items_.push_back(std::move(t));
    } else {
      items_[head_] = std::move(t);
      head_ = (head_ + 1) % capacity_;
    }
    ++pushes_;
  }

  /// i-th oldest entry.
  const Tuple& at(std::size_t i) const {
    if (i >= items_.size()) throw ContractViolation("RingBuffer::at: index out of range");
    return items_[(head_ + i) % items_.size()];
  }

  /// Uniform draw of `k` distinct positions (Floyd's algorithm), in the
  /// order they were selected.
  std::vector<std::size_t> sample_indices(std::size_t k, std::mt19937_64& rng) const {
    const std::size_t n = items_.size();
    if (k > n) throw ContractViolation("RingBuffer::sample: buffer holds fewer tuples than the batch size");
    std::vector<std::size_t> out;
    out.reserve(k);
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(k * 2);
    for (std::size_t j = n - k; j < n; ++j) {
      std::uniform_int_distribution<std::size_t> d(0, j);
      std::size_t t = d(rng);
      if (chosen.count(t)) t = j;
      chosen.insert(t);
      out.push_back(t);
    }
    return out;
  }

  std::vector<const Tuple*> sample(std::size_t k, std::mt19937_64& rng) const {
    std::vector<const Tuple*> out;
    for (std::size_t i : sample_indices(k, rng)) out.push_back(&at(i));
    return out;
  }

  /// Raw storage order plus write head, for snapshots.
  const std::vector<Tuple>& storage() const { return items_; }
  std::size_t head() const { return head_; }
  void restore(std::vector<Tuple> items, std::size_t head, std::uint64_t pushes) {
    if (items.size() > capacity_ || (items.size() > 0 && head >= items.size()) || (items.empty() && head != 0)) {
      throw ContractViolation("RingBuffer::restore: inconsistent snapshot");
    }
    items_ = std::move(items);
    head_ = head;
    pushes_ = pushes;
  }

 private:
  std::size_t capacity_;
  std::vector<Tuple> items_;
  std::size_t head_ = 0;
  std::uint64_t pushes_ = 0;
};

/// <s, a_dis, a_con, r, s'> from the random pre-training policy.
struct PretrainTuple {
  std::vector<float> s;
  int a_dis = 0;
  float a_con = 0.0f;
  float r = 0.0f;
  std::vector<float> s_next;
};

/// <s, z ++ x, r, s', terminal> from the latent policy.
struct PolicyTuple {
  std::vector<float> s;
  std::vector<float> latent;
  float r = 0.0f;
  std::vector<float> s_next;
  bool terminal = false;
};

}  // namespace hadmc
