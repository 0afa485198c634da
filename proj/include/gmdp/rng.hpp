#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gmdp {

// Per-caller random stream. Streams derived from the same (seed, id) pair
// replay identically; distinct ids give independent sequences.
class Stream {
 public:
  Stream(std::uint64_t master_seed, std::uint64_t stream_id) { reseed(master_seed, stream_id); }

  void reseed(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x9e3779b9u};
    engine_.seed(seq);
  }

  std::mt19937_64& engine() { return engine_; }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  std::size_t uniform_index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  // Draw one index from a probability vector.
  std::size_t categorical(const double* p, std::size_t n) {
    double x = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += p[i];
      if (x < acc) return i;
    }
    // Floating-point slack: fall back to the last index with positive mass.
    for (std::size_t i = n; i-- > 0;)
      if (p[i] > 0.0) return i;
    return n - 1;
  }

  // Multinomial counts of m draws, via sequential conditional binomials.
  void multinomial(long long m, const double* p, std::size_t n, std::vector<long long>& counts) {
    counts.assign(n, 0);
    long long left = m;
    double mass = 1.0;
    for (std::size_t i = 0; i + 1 < n && left > 0; ++i) {
      if (p[i] <= 0.0) continue;
      double q = mass > 0.0 ? p[i] / mass : 1.0;
      if (q >= 1.0) {
        counts[i] = left;
        left = 0;
        break;
      }
      long long c = std::binomial_distribution<long long>(left, q)(engine_);
      counts[i] = c;
      left -= c;
      mass -= p[i];
    }
    if (left > 0) {
      // Remaining mass sits on the last positive entry.
      std::size_t last = n - 1;
      while (last > 0 && p[last] <= 0.0) --last;
      counts[last] += left;
    }
  }

  long long binomial(long long m, double q) {
    if (q <= 0.0) return 0;
    if (q >= 1.0) return m;
    return std::binomial_distribution<long long>(m, q)(engine_);
  }

 private:
  std::mt19937_64 engine_;
};

// Stream ids used across the library so that concurrent consumers never share
// a sequence.
namespace stream_id {
inline constexpr std::uint64_t planner = 1;
inline constexpr std::uint64_t noise = 2;
inline constexpr std::uint64_t explore = 3;
inline constexpr std::uint64_t generator = 4;
inline constexpr std::uint64_t family = 5;
}  // namespace stream_id

}  // namespace gmdp
