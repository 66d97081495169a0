#pragma once

#include <cstdint>

#include "crgan/types.hpp"

namespace crgan {

// Counter-based splittable PRNG. A stream is a (key, counter) pair; output i
// is a strong bijective mix of key and i, so every draw is addressable and
// child streams derived by index never overlap with the parent sequence.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  // Independent stream for the given index; the parent is not advanced.
  RngStream child(std::uint64_t index) const;

  std::uint64_t next_u64();
  double uniform();  // (0, 1]
  double normal();   // standard normal (Box-Muller)
  // Uniform integer in [0, n); n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);
  void fill_normal(Matrix& out);
  Matrix normal_matrix(Index rows, Index cols);

 private:
  RngStream(std::uint64_t key, std::uint64_t counter);

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace crgan
