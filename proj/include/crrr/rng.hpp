#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crrr/special.hpp"

namespace crrr {

namespace detail {

// splitmix64 finalizer; used to derive stream keys, never for output.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

// Counter-based generator (Philox2x64-10). The output is a pure function of
// (seed, stream, counter), so any (replication, fold, draw) unit can own a
// private stream and produce identical values no matter which thread or
// process evaluates it.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), ctr_(0) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Child stream with its own counter; id spaces are per parent.
  RngStream sub(std::uint64_t id) const {
    return RngStream(seed_, detail::mix64(stream_ ^ detail::mix64(id + 0x9E3779B97F4A7C15ull)));
  }

  std::uint64_t next_u64() { return block(ctr_++); }

  // Uniform on [0, 1), 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); never returns an endpoint.
  double next_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  double normal() { return std_normal_quantile(next_open()); }

  double exponential() { return -std::log(next_open()); }

  bool bernoulli(double p) { return next_double() < p; }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_int(i)]);
    }
  }

 private:
  static std::pair<std::uint64_t, std::uint64_t> mulhilo(std::uint64_t a, std::uint64_t b) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    return {static_cast<std::uint64_t>(p >> 64), static_cast<std::uint64_t>(p)};
  }

  std::uint64_t block(std::uint64_t ctr) const {
    // counter words: (ctr, stream); key: seed.
    std::uint64_t c0 = ctr, c1 = stream_, k = seed_;
    for (int round = 0; round < 10; ++round) {
      const auto [hi, lo] = mulhilo(0xD2B74407B1CE6E93ull, c0);
      c0 = hi ^ k ^ c1;
      c1 = lo;
      k += 0x9E3779B97F4A7C15ull;
    }
    return c0;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t ctr_;
};

}  // namespace crrr
