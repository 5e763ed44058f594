#pragma once

#include <vector>

#include "bads/rng.hpp"

namespace bads {

/// Minibatches drawn without replacement, reshuffled every epoch. A trailing
/// partial batch is dropped, so every batch holds distinct ids.
class BatchStream {
 public:
  BatchStream(std::vector<std::size_t> pool, std::size_t batch_size, Rng rng);

  std::vector<std::size_t> next();

  std::size_t batch_size() const { return batch_size_; }
  std::size_t pool_size() const { return pool_.size(); }
  std::size_t epoch() const { return epoch_; }

 private:
  void reshuffle();

  std::vector<std::size_t> pool_;
  std::size_t batch_size_;
  Rng rng_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

std::vector<std::size_t> iota_ids(std::size_t n);

}  // namespace bads
