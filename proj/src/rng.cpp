#include "crgan/rng.hpp"

#include <cmath>

namespace crgan {
namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kChildSalt = 0xD1B54A32D192ED03ull;

// splitmix64 finalizer; bijective on 64-bit words.
std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : key_(mix(seed + kGamma)) {}

RngStream::RngStream(std::uint64_t key, std::uint64_t counter)
    : key_(key), counter_(counter) {}

RngStream RngStream::child(std::uint64_t index) const {
  return RngStream(mix(key_ ^ mix(kChildSalt + index * kGamma)), 0);
}

std::uint64_t RngStream::next_u64() {
  ++counter_;
  return mix(key_ + counter_ * kGamma);
}

double RngStream::uniform() {
  // 53-bit mantissa; +1 keeps the result in (0, 1] so log() stays finite.
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw ConfigError("uniform_index: n must be positive");
  // Multiply-shift reduction; bias is negligible for n << 2^64.
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

void RngStream::fill_normal(Matrix& out) {
  double* data = out.data();
  const Index n = out.size();
  for (Index i = 0; i < n; ++i) data[i] = normal();
}

Matrix RngStream::normal_matrix(Index rows, Index cols) {
  Matrix out(rows, cols);
  fill_normal(out);
  return out;
}

}  // namespace crgan
