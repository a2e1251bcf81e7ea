#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace dyngossip {

/// Deterministic 64-bit generator (splitmix64 core).
///
/// All randomness in the library flows from one user seed through named
/// substreams, so the graph generator, the initial distribution, the online
/// strategies and the seed-set sampler can be varied independently. A stream
/// identified by (seed, name, indices) produces the same values on every
/// platform; no standard-library distribution objects are used because their
/// output is implementation-defined.
class Rng {
public:
  explicit Rng(std::uint64_t state) : state_(state) {}

  static Rng substream(std::uint64_t seed, std::string_view name) {
    Rng r(scramble(seed ^ 0x6a09e667f3bcc908ULL));
    r.absorb(fnv1a(name));
    return r;
  }

  static Rng substream(std::uint64_t seed, std::string_view name,
                       std::uint64_t a) {
    Rng r = substream(seed, name);
    r.absorb(a);
    return r;
  }

  static Rng substream(std::uint64_t seed, std::string_view name,
                       std::uint64_t a, std::uint64_t b) {
    Rng r = substream(seed, name, a);
    r.absorb(b);
    return r;
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return scramble(state_);
  }

  /// Uniform integer in [0, bound); bound must be positive. Rejection
  /// sampling keeps the draw exactly uniform.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below: zero bound");
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return unit() < p;
  }

  template <class T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

  /// Draws `count` distinct integers from [0, n), returned sorted ascending.
  std::vector<int> sample_without_replacement(int n, int count) {
    if (n < 0 || count < 0)
      throw std::invalid_argument("Rng::sample_without_replacement: negative");
    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    if (count >= n) return pool;
    // Partial Fisher-Yates: fix positions [0, count).
    for (int i = 0; i < count; ++i) {
      const std::uint64_t j =
          static_cast<std::uint64_t>(i) + below(static_cast<std::uint64_t>(n - i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(count));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

private:
  static std::uint64_t scramble(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const char c : text) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    return h;
  }

  void absorb(std::uint64_t value) {
    state_ = scramble(state_ ^ (value + 0x9e3779b97f4a7c15ULL));
  }

  std::uint64_t state_;
};

}  // namespace dyngossip
