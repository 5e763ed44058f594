#include "bads/batching.hpp"

#include <numeric>

#include "bads/errors.hpp"

namespace bads {

BatchStream::BatchStream(std::vector<std::size_t> pool, std::size_t batch_size, Rng rng)
    : pool_(std::move(pool)), batch_size_(batch_size), rng_(rng) {
  if (batch_size_ == 0) throw ValidationError("batch size must be >= 1");
  if (batch_size_ > pool_.size()) {
    throw ValidationError("batch size exceeds the number of available examples");
  }
  reshuffle();
}

void BatchStream::reshuffle() {
  for (std::size_t i = pool_.size(); i > 1; --i) std::swap(pool_[i - 1], pool_[rng_.below(i)]);
  cursor_ = 0;
}

std::vector<std::size_t> BatchStream::next() {
  if (cursor_ + batch_size_ > pool_.size()) {
    reshuffle();
    ++epoch_;
  }
  std::vector<std::size_t> ids(pool_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                               pool_.begin() + static_cast<std::ptrdiff_t>(cursor_ + batch_size_));
  cursor_ += batch_size_;
  return ids;
}

std::vector<std::size_t> iota_ids(std::size_t n) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

}  // namespace bads
